"""Implicit L1 / distributed-order time marching of the LDG system.

At step ``n`` the scheme solves

    omega M V^n - Op(V^n, t_n) = M H^n,

where ``Op`` is the weak spatial operator (convection, diffusion,
fractional diffusion and source), ``omega = sum_j w_j`` with
``w_j = W(alpha_j) dpi_j / lambda_j``, and ``H^n`` is the history term

    H^n = sum_j w_j [ sum_{l=1}^{n-1} (a^j_{n-l-1} - a^j_{n-l}) V^l + a^j_{n-1} V^0 ].

The sum over ``j`` is folded into combined kernels ``c_m = sum_j w_j a^j_m``
so that each step costs ``O(n N (k+1))`` regardless of the number of
order nodes.  The nonlinear solve is a Picard-type iteration whose
linearisation freezes the LLF wave speeds and ``sqrt(S)`` at the previous
iterate and differentiates the rest exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .basis import GridFunction, l2_error, l2_project
from .fractional import DistributedRule, TimeGrid, distributed_rule, single_order_rule
from .ldg import FluxSpec, LDGDiscretization, PDEProblem
from .riesz import assemble_riesz_matrix

log = logging.getLogger(__name__)


class NonconvergenceError(RuntimeError):
    def __init__(self, step: int, residual: float, iterations: int):
        super().__init__(
            f"Picard iteration did not converge at step {step} after {iterations} "
            f"iterations (last relative change {residual:.3e})"
        )
        self.step = step
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    grid: TimeGrid
    rule: DistributedRule
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    sigma: float = 1.0
    quad_points: int | None = None
    fast_history: bool = True
    diagnostics_path: str | Path | None = None

    def __post_init__(self):
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be at least 1")
        if abs(self.rule.dt - self.grid.dt) > 1e-14 * self.grid.dt:
            raise ValueError("order rule and time grid use different step sizes")

    @classmethod
    def create(cls, T: float, num_steps: int, *, alpha: float | None = None, M_q: int = 50,
               W: Callable | None = None, **kw) -> "SolverConfig":
        """Single order ``alpha`` when given, else the distributed rule with ``M_q`` nodes."""
        grid = TimeGrid(T, num_steps)
        if alpha is not None:
            rule = single_order_rule(alpha, grid.dt)
        elif W is not None:
            rule = distributed_rule(M_q, W, grid.dt)
        else:
            rule = distributed_rule(M_q, dt=grid.dt)
        return cls(grid, rule, **kw)


@dataclass
class HistoryBuffer:
    """Coefficient vectors ``V^0 .. V^{n-1}``, append-only."""

    states: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def append(self, V: np.ndarray) -> None:
        v = np.array(V, dtype=float, copy=True)
        v.setflags(write=False)
        self.states.append(v)


@dataclass(frozen=True)
class StepReport:
    step: int
    t: float
    iterations: int
    residual: float
    norm: float

    def record(self) -> str:
        return (f"step={self.step} t={self.t:.12g} picard_iters={self.iterations} "
                f"residual={self.residual:.3e} norm={self.norm:.12e}")


def combined_kernel(rule: DistributedRule, n: int) -> np.ndarray:
    """``c_m = sum_j w_j a^j_m`` for ``m = 0..n-1``."""
    return rule.effective_weights @ rule.l1_table(n)


def history_rhs_reference(history: HistoryBuffer, rule: DistributedRule, n: int) -> np.ndarray:
    """Direct evaluation node by node; the oracle for :func:`history_rhs`."""
    if n < 1 or len(history) < n:
        raise ValueError(f"history needs states 0..{n - 1}, has {len(history)}")
    out = np.zeros_like(history.states[0])
    for wj, a in zip(rule.effective_weights, rule.l1_table(n)):
        acc = a[n - 1] * history.states[0]
        for l in range(1, n):
            acc = acc + (a[n - l - 1] - a[n - l]) * history.states[l]
        out = out + wj * acc
    return out


def history_rhs(history: HistoryBuffer, rule: DistributedRule, n: int, kernel: np.ndarray | None = None) -> np.ndarray:
    if n < 1 or len(history) < n:
        raise ValueError(f"history needs states 0..{n - 1}, has {len(history)}")
    c = kernel if kernel is not None else combined_kernel(rule, n)
    if n == 1:
        return c[0] * history.states[0]
    l = np.arange(1, n)
    coef = c[n - l - 1] - c[n - l]
    stack = np.asarray(history.states[1:n])
    return coef @ stack + c[n - 1] * history.states[0]


def _is_linear(problem: PDEProblem) -> bool:
    probe = np.linspace(-2.0, 2.0, 17)
    dF = np.asarray(problem.dF(probe), dtype=float) * np.ones_like(probe)
    sS = problem.eval_sqrt_S(probe)
    return bool(np.ptp(dF) == 0.0 and np.ptp(sS) == 0.0)


class Solver:
    """One solver instance per run; owns the history and the assembled operators."""

    def __init__(self, problem: PDEProblem, config: SolverConfig, disc: LDGDiscretization | None = None,
                 k: int | None = None):
        self.problem = problem
        self.config = config
        if disc is None:
            if k is None:
                raise ValueError("need either a discretisation or the polynomial degree k")
            riesz = assemble_riesz_matrix(problem.mesh, k, problem.beta) if problem.b > 0 else None
            disc = LDGDiscretization(problem.mesh, k, FluxSpec(sigma=config.sigma), riesz, config.quad_points)
        self.disc = disc
        self.history = HistoryBuffer()
        self.kernel = combined_kernel(config.rule, config.grid.num_steps)
        self.omega = config.rule.omega
        self.linear = _is_linear(problem)
        self._mass = disc.mass_diag
        self._K, _ = disc._frac_operators(problem.b)
        self._linear_lu = None

    def initial_state(self) -> np.ndarray:
        return l2_project(self.problem.V0, self.problem.mesh, self.disc.k, self.disc.k + 4).vector

    def _history(self, n: int) -> np.ndarray:
        if self.config.fast_history:
            return history_rhs(self.history, self.config.rule, n, self.kernel)
        return history_rhs_reference(self.history, self.config.rule, n)

    def _jacobian(self, V, data, lam, coeffs) -> np.ndarray:
        d = self.disc
        J = -self._K.copy()
        J -= (d.jac_convection(V, self.problem, lam) + d.jac_diffusion(V, self.problem, coeffs)).toarray()
        J[np.diag_indices_from(J)] += self.omega * self._mass
        return J

    def step(self, n: int) -> tuple[np.ndarray, StepReport]:
        cfg, d, pb = self.config, self.disc, self.problem
        t = float(cfg.grid.times[n])
        data = pb.boundary_data(t)
        rhs_hist = self._mass * self._history(n)
        src = d.weak_source(pb.g, t) + d.weak_fractional(np.zeros(d.ndof), pb.b, data)
        V = np.array(self.history.states[n - 1], copy=True)

        def residual(V, lam, coeffs):
            conv, _ = d.weak_convection(V, pb, data, lam)
            op = conv + d.weak_diffusion(V, pb, data, coeffs) + self._K @ V + src
            return self.omega * self._mass * V - op - rhs_hist

        change = np.inf
        for it in range(1, cfg.picard_max_iters + 1):
            _, lam = d.weak_convection(V, pb, data)
            coeffs = d.diffusion_coefficients(V, pb, data)
            G = residual(V, lam, coeffs)
            if self.linear:
                if self._linear_lu is None:
                    self._linear_lu = sla.lu_factor(self._jacobian(V, data, lam, coeffs))
                delta = -sla.lu_solve(self._linear_lu, G)
            else:
                delta = -np.linalg.solve(self._jacobian(V, data, lam, coeffs), G)
            V = V + delta
            nv = np.linalg.norm(V)
            change = np.linalg.norm(delta) / nv if nv > 0 else np.linalg.norm(delta)
            if self.linear or change <= cfg.picard_tol:
                break
        else:
            raise NonconvergenceError(n, change, cfg.picard_max_iters)
        if self.linear:
            # a linear system is solved exactly in one pass; report its equation residual
            _, lam = d.weak_convection(V, pb, data)
            G = residual(V, lam, d.diffusion_coefficients(V, pb, data))
            change = np.linalg.norm(G) / max(np.linalg.norm(self.omega * self._mass * V), 1e-300)
        norm = float(np.sqrt(np.sum(self._mass * V * V)))
        return V, StepReport(n, t, it, float(change), norm)

    def run(self, callback: Callable | None = None) -> "Trajectory":
        cfg = self.config
        V = self.initial_state()
        self.history.append(V)
        norms = [float(np.sqrt(np.sum(self._mass * V * V)))]
        reports = []
        sink = open(cfg.diagnostics_path, "w") if cfg.diagnostics_path else None
        try:
            for n in range(1, cfg.grid.num_steps + 1):
                V, rep = self.step(n)
                self.history.append(V)
                norms.append(rep.norm)
                reports.append(rep)
                if sink:
                    sink.write(rep.record() + "\n")
                if callback:
                    callback(n, V, rep)
        finally:
            if sink:
                sink.close()
        return Trajectory(self.disc.gf(V), cfg.grid.times, np.array(norms), reports)


@dataclass
class Trajectory:
    final: GridFunction
    times: np.ndarray
    norms: np.ndarray
    reports: list

    def error(self, exact: Callable, q: int | None = None) -> float:
        """L2 error at the final time against ``exact(x, t)``."""
        T = float(self.times[-1])
        return l2_error(self.final, lambda x: exact(x, T), q if q is not None else self.final.k + 3)

    @property
    def max_iterations(self) -> int:
        return max((r.iterations for r in self.reports), default=0)


def step(history: HistoryBuffer, n: int, problem: PDEProblem, config: SolverConfig,
         disc: LDGDiscretization) -> tuple[np.ndarray, StepReport]:
    """Advance one step given ``V^0..V^{n-1}`` in ``history``."""
    if n < 1:
        raise ValueError("step index must be >= 1")
    solver = Solver(problem, config, disc)
    solver.history = history
    return solver.step(n)


def run(problem: PDEProblem, config: SolverConfig, k: int, disc: LDGDiscretization | None = None) -> Trajectory:
    return Solver(problem, config, disc, k).run()


@dataclass(frozen=True)
class StabilityResult:
    norms: np.ndarray
    max_relative_increase: float
    tol: float

    @property
    def monotone(self) -> bool:
        return self.max_relative_increase <= self.tol


def stability_run(problem: PDEProblem, config: SolverConfig, k: int, tol: float = 1e-10,
                  disc: LDGDiscretization | None = None) -> StabilityResult:
    """March with ``g = 0`` and check ``||V^n||`` never grows beyond ``tol`` (relative)."""
    if problem.g is not None:
        raise ValueError("stability runs need a problem without source term")
    traj = run(problem, config, k, disc)
    norms = traj.norms
    ref = np.maximum(norms[:-1], 1e-300)
    inc = np.max((norms[1:] - norms[:-1]) / ref) if len(norms) > 1 else 0.0
    inc = max(float(inc), 0.0) if np.any(norms > 0) else 0.0
    return StabilityResult(norms, inc, tol)
