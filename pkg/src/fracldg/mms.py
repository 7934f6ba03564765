"""Manufactured solutions, source terms, convergence studies and tables.

Every case has a separable exact solution ``V = T(t) X(x)`` with ``X`` a
compactly supported piecewise polynomial, so the source

    g = D_t V + F(V)_x - S V_xx + b (-Lap)^(beta/2) V

is available in closed form term by term.  The time-fractional part
``D_t T`` can be formed three ways (``time_term``):

``"continuous"``  the exact distributed-order (or single-order) Caputo
                  derivative; this is the true PDE source.
``"l1"``          the L1 approximation at the grid times, integrated
                  exactly over the order.  The only remaining time-side
                  error is the midpoint rule in the order variable.
``"discrete"``    the complete discrete operator used by the solver
                  (midpoint rule in the order and L1 in time).  No time
                  error remains, which isolates the spatial error.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .basis import Mesh1D
from .fractional import (
    DistributedRule,
    PiecewisePolynomial,
    TimeGrid,
    caputo_exp_decay,
    caputo_monomial_exact,
    caputo_quadrature,
    distributed_rule,
    riesz_apply_to_polynomial,
    riesz_potential_quadrature,
    single_order_rule,
)
from .ldg import PDEProblem
from .march import SolverConfig, Solver, combined_kernel

TIME_TERMS = ("continuous", "l1", "discrete")


# {{{ cases


@dataclass(frozen=True)
class TimeFactor:
    """``t^m`` (``kind='power'``) or ``exp(-t)`` (``kind='exp'``)."""

    kind: str
    m: int = 0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t**self.m if self.kind == "power" else np.exp(-t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return self.m * t ** (self.m - 1) if self.m > 0 else np.zeros_like(t)
        return -np.exp(-t)

    def caputo(self, alpha: float, t: float) -> float:
        if self.kind == "power":
            return caputo_monomial_exact(self.m, alpha, t)
        return caputo_exp_decay(alpha, t)


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    domain: tuple[float, float]
    T: float
    time: TimeFactor
    X: PiecewisePolynomial
    F: Callable
    dF: Callable
    S_value: float
    b_of_beta: Callable[[float], float]
    dirichlet: bool = False  # nonzero boundary data taken from the exact solution
    min_elements: int = 1  # meshes must be multiples of this to keep kinks at vertices

    def exact(self, x, t):
        return self.time(t) * self.X(x)

    def b(self, beta: float) -> float:
        return float(self.b_of_beta(beta))

    def mesh(self, N: int) -> Mesh1D:
        if N % self.min_elements:
            raise ValueError(f"{self.name} needs N to be a multiple of {self.min_elements}")
        return Mesh1D(self.domain[0], self.domain[1], N)

    def problem(self, beta: float, N: int, g: Callable | None) -> PDEProblem:
        s = self.S_value
        a, c = self.domain
        lv = (lambda t: float(self.exact(a, t))) if self.dirichlet else (lambda t: 0.0)
        rv = (lambda t: float(self.exact(c, t))) if self.dirichlet else (lambda t: 0.0)
        return PDEProblem(
            mesh=self.mesh(N), F=self.F, dF=self.dF,
            S=lambda v: np.full_like(np.asarray(v, dtype=float), s),
            b=self.b(beta), beta=beta, g=g, V0=lambda x: self.exact(x, 0.0),
            left_value=lv, right_value=rv,
            phi=lambda v: math.sqrt(s) * np.asarray(v, dtype=float),
            sqrt_S=lambda v: np.full_like(np.asarray(v, dtype=float), math.sqrt(s)),
        )


def _gamma_ratio_b(beta: float) -> float:
    return math.gamma(8.0 - beta) / math.gamma(8.0)


def case_library() -> dict[str, ManufacturedCase]:
    ex1 = ManufacturedCase(
        "example1", (-1.0, 1.0), 1.0, TimeFactor("power", 2),
        PiecewisePolynomial.single(Polynomial([-1.0, 0.0, 1.0]) ** 4, -1.0, 1.0),
        F=lambda v: 0.5 * v**2, dF=lambda v: v, S_value=1.0, b_of_beta=_gamma_ratio_b,
    )
    ex2 = ManufacturedCase(
        "example2", (0.0, 1.0), 1.0, TimeFactor("power", 3),
        PiecewisePolynomial.single(Polynomial([1.0, 0.0, -1.0]) ** 2, 0.0, 1.0),
        F=lambda v: 0.5 * v**4 + v, dF=lambda v: 2.0 * v**3 + 1.0, S_value=0.0,
        b_of_beta=_gamma_ratio_b, dirichlet=True,
    )
    ex3 = ManufacturedCase(
        "example3", (-2.0, 2.0), 0.5, TimeFactor("exp"),
        PiecewisePolynomial.single(Polynomial([1.0, 0.0, -1.0]) ** 4 / 10.0, -1.0, 1.0),
        F=lambda v: 0.5 * v**2, dF=lambda v: v, S_value=0.0, b_of_beta=lambda beta: 1.0,
        min_elements=4,
    )
    return {c.name: c for c in (ex1, ex2, ex3)}


def zero_case() -> ManufacturedCase:
    return ManufacturedCase(
        "zero", (0.0, 1.0), 1.0, TimeFactor("power", 1),
        PiecewisePolynomial.single(Polynomial([0.0]), 0.0, 1.0),
        F=lambda v: 0.5 * v**2, dF=lambda v: v, S_value=1.0, b_of_beta=lambda beta: 1.0,
    )


# }}}


# {{{ source terms


def gauss_order_rule(dt: float, W: Callable, points: int = 48) -> DistributedRule:
    """Gauss-Legendre rule in the order variable, used for the ``"l1"`` time term."""
    x, w = np.polynomial.legendre.leggauss(points)
    nodes = 0.5 * (x + 1.0)
    return DistributedRule(nodes, 0.5 * w, np.asarray(W(nodes), dtype=float) * np.ones(points), dt, W)


def discrete_time_derivative(values: np.ndarray, rule: DistributedRule) -> np.ndarray:
    """``sum_j W(alpha_j) dpi_j delta_t^{alpha_j}`` of a sampled function, at every grid time.

    Entry ``n`` uses ``values[0..n]``; entry 0 is zero by convention.
    """
    n = len(values) - 1
    c = combined_kernel(rule, n)
    dv = np.diff(values)
    out = np.zeros(n + 1)
    for m in range(1, n + 1):
        out[m] = np.dot(c[:m], dv[m - 1::-1])
    return out


@dataclass
class SourceTerm:
    """Callable ``g(x, t)`` built from the closed-form pieces of a case."""

    case: ManufacturedCase
    beta: float
    rule: DistributedRule
    time_term: str
    grid: TimeGrid | None = None
    _frac: Callable = field(init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _time_table: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.time_term not in TIME_TERMS:
            raise ValueError(f"time_term must be one of {TIME_TERMS}, got {self.time_term!r}")
        self._frac = riesz_apply_to_polynomial(
            self.case.X, self.beta, allow_boundary_values=self.case.dirichlet
        )
        self._dX = self.case.X.deriv()
        self._d2X = self.case.X.deriv(2)
        if self.time_term != "continuous":
            if self.grid is None:
                raise ValueError(f"time_term={self.time_term!r} needs the time grid")
            tf = self.case.time(self.grid.times)
            if self.time_term == "discrete" or self.rule.single:
                r = self.rule
            else:
                r = gauss_order_rule(self.grid.dt, self.rule.weight_fn)
            self._time_table = discrete_time_derivative(tf, r)

    def time_derivative(self, t: float) -> float:
        if self._time_table is None:
            return self.rule.integrate_orders(lambda a: self.case.time.caputo(a, t))
        n = int(round(t / self.grid.dt))
        if abs(n * self.grid.dt - t) > 1e-9 * self.grid.dt or not 0 <= n <= self.grid.num_steps:
            raise ValueError(f"t={t} is not a grid time; time_term={self.time_term!r} lives on the grid")
        return float(self._time_table[n])

    def spatial_pieces(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        key = (x.shape, x.tobytes())
        if key not in self._cache:
            self._cache[key] = (self.case.X(x), self._dX(x), self._d2X(x), self._frac(x.ravel()).reshape(x.shape))
        return self._cache[key]

    def convection(self, x, t):
        X, dX, _, _ = self.spatial_pieces(np.asarray(x, dtype=float))
        Tt = float(self.case.time(t))
        return self.case.dF(Tt * X) * Tt * dX

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        X, dX, d2X, FL = self.spatial_pieces(x)
        Tt = float(self.case.time(t))
        V = Tt * X
        return (self.time_derivative(t) * X
                + self.case.dF(V) * Tt * dX
                - self.case.S_value * Tt * d2X
                - self.case.b(self.beta) * Tt * FL)


def derive_source(case: ManufacturedCase, beta: float, rule: DistributedRule | None = None,
                  time_term: str = "continuous", grid: TimeGrid | None = None) -> SourceTerm:
    """Source making ``case.exact`` solve the PDE (see module docstring for ``time_term``)."""
    if rule is None:
        rule = distributed_rule(50, dt=grid.dt if grid else 1.0)
    return SourceTerm(case, beta, rule, time_term, grid)


def manufactured_residual(case: ManufacturedCase, beta: float, source: SourceTerm,
                          xs: np.ndarray, ts: np.ndarray) -> float:
    """Max pointwise strong-form residual with every term from an independent oracle.

    Caputo derivatives come from adaptive quadrature of the defining
    integral (integrated over the order by the source's own rule
    surrogate ``integrate_orders``), the convection and diffusion terms
    from exact polynomial derivatives of ``X`` composed by hand, and
    the fractional Laplacian as ``Lop V''`` by adaptive quadrature.
    """
    if source.time_term != "continuous":
        raise ValueError("the strong residual is defined for the continuous source only")
    X = case.X
    d1, d2 = X.deriv(), X.deriv(2)
    mu = 2.0 - beta
    supp = list(X.breaks)
    frac = np.array([riesz_potential_quadrature(d2, supp, mu, float(x)) for x in xs])
    worst = 0.0
    tf = case.time
    for t in ts:
        if tf.kind == "power":
            dT = lambda a: caputo_quadrature(lambda s: tf.m * s ** (tf.m - 1), a, t)
        else:
            dT = lambda a: caputo_quadrature(lambda s: -math.exp(-s), a, t)
        Dt = source.rule.integrate_orders(dT)
        Tt = float(tf(t))
        V = Tt * X(xs)
        Vx, Vxx = Tt * d1(xs), Tt * d2(xs)
        strong = Dt * X(xs) + case.dF(V) * Vx - case.S_value * Vxx - case.b(beta) * Tt * frac
        worst = max(worst, float(np.max(np.abs(strong - source(xs, t)))))
    return worst


# }}}


# {{{ convergence studies


@dataclass(frozen=True)
class ConvergenceTable:
    axis: str = field(compare=False)
    resolutions: tuple = ()
    errors: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def orders(self) -> list[float | None]:
        out: list[float | None] = [None]
        for r in range(1, len(self.errors)):
            m = self.resolutions[r] / self.resolutions[r - 1]
            e0, e1 = self.errors[r - 1], self.errors[r]
            # undefined for repeated resolutions or non-positive errors
            out.append(math.log(e0 / e1) / math.log(m) if m > 0 and m != 1 and e0 > 0 and e1 > 0 else None)
        return out[: len(self.errors)]

    def rows(self):
        return list(zip(self.resolutions, self.errors, self.orders))


def emit_table(table: ConvergenceTable, fmt: str = "csv", comments: bool = False) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        if comments:
            meta = {"axis": table.axis, **table.metadata}
            buf.write("# " + ", ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["resolution", "error", "order"])
        for res, err, order in table.rows():
            w.writerow([res, f"{err:.2e}", "" if order is None else f"{order:.2f}"])
        return buf.getvalue()
    if fmt == "markdown":
        label = {"h": "N", "dt": "M_t", "p": "1/p"}.get(table.axis, table.axis)
        lines = [f"| {label} | E_h | order |", "|---|---|---|"]
        for res, err, order in table.rows():
            lines.append(f"| {res} | {err:.2e} | {'—' if order is None else f'{order:.2f}'} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table(text: str) -> ConvergenceTable:
    meta: dict = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            for item in line[1:].split(","):
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or rows[0] != ["resolution", "error", "order"]:
        raise ValueError("table text lacks the resolution,error,order header")
    res = tuple(int(r[0]) if r[0].lstrip("-").isdigit() else float(r[0]) for r in rows[1:])
    errs = tuple(float(r[1]) for r in rows[1:])
    axis = meta.pop("axis", "h")
    return ConvergenceTable(axis, res, errs, meta)


def gnuplot_data(table: ConvergenceTable) -> str:
    lines = [f"# log10({table.axis} resolution)  log10(error)"]
    lines += [f"{math.log10(r):.10f} {math.log10(e):.10f}" for r, e in zip(table.resolutions, table.errors)]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StudySettings:
    """Fixed parameters of a run; the study axis overrides one of N, M_t, M_q."""

    N: int = 40
    k: int = 1
    M_t: int = 500
    M_q: int = 50
    alpha: float | None = None  # single order instead of the distributed rule
    time_term: str = "continuous"
    sigma: float = 1.0
    picard_tol: float = 1e-10


def solve_case(case: ManufacturedCase, beta: float, settings: StudySettings):
    """Run one case; returns (trajectory, L2 error at T)."""
    grid = TimeGrid(case.T, settings.M_t)
    cfg = SolverConfig.create(case.T, settings.M_t, alpha=settings.alpha, M_q=settings.M_q,
                              sigma=settings.sigma, picard_tol=settings.picard_tol)
    g = derive_source(case, beta, cfg.rule, settings.time_term, grid)
    problem = case.problem(beta, settings.N, g)
    traj = Solver(problem, cfg, k=settings.k).run()
    return traj, traj.error(case.exact)


_AXIS_FIELD = {"h": "N", "dt": "M_t", "p": "M_q"}


def convergence_study(case: ManufacturedCase, beta: float, k: int, axis: str, levels,
                      settings: StudySettings | None = None) -> ConvergenceTable:
    if axis not in _AXIS_FIELD:
        raise ValueError(f"axis must be one of {tuple(_AXIS_FIELD)}, got {axis!r}")
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    base = settings or StudySettings()
    errors = []
    for lev in levels:
        s = StudySettings(**{**base.__dict__, "k": k, _AXIS_FIELD[axis]: int(lev)})
        try:
            _, err = solve_case(case, beta, s)
        except Exception as exc:
            raise RuntimeError(f"{case.name}: level {axis}={lev} failed: {exc}") from exc
        errors.append(err)
    meta = {"case": case.name, "beta": beta, "k": k, **{kk: v for kk, v in base.__dict__.items()
                                                      if kk not in ("k", _AXIS_FIELD[axis])}}
    return ConvergenceTable(axis, tuple(int(l) for l in levels), tuple(errors), meta)


# }}}
