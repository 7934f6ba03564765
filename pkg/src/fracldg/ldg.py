"""LDG spatial discretisation of

    V_t-part + F(V)_x - (S(V) V_x)_x + b (-Lap)^(beta/2) V = g

written as the first-order system

    R = sqrt(b) V_x,   E = Lop R,   L = phi(V)_x,
    time-part + F(V)_x - (sqrt(S) L)_x - sqrt(b) E_x = g,

with ``phi(v) = int_0^v sqrt(S(u)) du``.  Interface traces alternate:
``V_hat = V^-`` goes with ``E_hat = E^+`` and ``L_hat = L^+``, and
``phi_hat = phi(V^-)``.  Dirichlet data enter through ``V_hat`` at both
ends, and the boundary traces of ``E`` and ``L`` carry the penalty
``(sigma/h) [[V]]``, with the outside state taken to be the data.

Every weak form is collected in sparse operator matrices acting on the
flattened modal coefficient vector (element-major).  ``weak`` quantities
are tested against the basis (``M`` times the nodal-in-modal rhs);
:meth:`LDGDiscretization.spatial_rhs` applies ``M^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate

from .basis import GridFunction, Mesh1D, gauss_rule, legendre_vandermonde
from .riesz import RieszOperator

_ZERO = lambda t: 0.0


def _zero_fn(v):
    return np.zeros_like(np.asarray(v, dtype=float))


# {{{ problem description


@dataclass(frozen=True)
class PDEProblem:
    """Coefficients, data and domain of one fractional convection-diffusion problem.

    ``sqrt_S`` and ``phi`` are optional closed forms; when omitted they
    are derived from ``S`` (``phi`` through adaptive quadrature).
    ``left_value``/``right_value`` are Dirichlet data as functions of t.
    """

    mesh: Mesh1D
    F: Callable = _zero_fn
    dF: Callable = _zero_fn
    S: Callable = _zero_fn
    b: float = 0.0
    beta: float = 1.5
    g: Callable | None = None
    V0: Callable = _zero_fn
    left_value: Callable = _ZERO
    right_value: Callable = _ZERO
    phi: Callable | None = None
    sqrt_S: Callable | None = None

    def __post_init__(self):
        if self.b < 0:
            raise ValueError(f"fractional diffusion strength must be >= 0, got {self.b}")
        if not 1.0 < self.beta < 2.0:
            raise ValueError(f"spatial order must lie in (1, 2), got {self.beta}")
        if abs(float(np.asarray(self.F(np.zeros(1)))[0])) > 1e-14:
            raise ValueError("convection flux must satisfy F(0) = 0")

    def eval_sqrt_S(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.sqrt_S is not None:
            return np.asarray(self.sqrt_S(v), dtype=float) * np.ones_like(v)
        s = np.asarray(self.S(v), dtype=float) * np.ones_like(v)
        if np.any(s < 0):
            raise ValueError("diffusion coefficient S is negative")
        return np.sqrt(s)

    def eval_phi(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.phi is not None:
            return np.asarray(self.phi(v), dtype=float) * np.ones_like(v)
        return np.vectorize(lambda x: phi_transform(self.S, x))(v)

    def boundary_data(self, t: float) -> np.ndarray:
        return np.array([float(self.left_value(t)), float(self.right_value(t))])


@dataclass(frozen=True)
class FluxSpec:
    """Alternating interior traces, local Lax-Friedrichs convection flux, boundary penalty.

    ``viscosity_scale`` multiplies the LLF wave-speed bound; values >= 1
    keep the flux monotone.
    """

    sigma: float = 1.0
    viscosity_scale: float = 1.0
    samples: int = 9

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"penalty coefficient must be >= 0, got {self.sigma}")
        if self.viscosity_scale < 1.0:
            raise ValueError("viscosity scale below 1 breaks monotonicity of the flux")


def phi_transform(S: Callable, v: float) -> float:
    """``phi(v) = int_0^v sqrt(S(u)) du`` by adaptive quadrature."""
    v = float(v)
    if v == 0.0:
        return 0.0
    lo, hi = min(0.0, v), max(0.0, v)
    probe = np.asarray(S(np.linspace(lo, hi, 33)), dtype=float)
    if np.any(probe < 0):
        raise ValueError("diffusion coefficient S is negative on the integration range")

    def integrand(u):
        s = float(S(u))
        if s < 0:
            raise ValueError(f"diffusion coefficient S({u}) = {s} is negative")
        return math.sqrt(s)

    val, _ = integrate.quad(integrand, 0.0, v, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def _wave_speed(dF: Callable, vm, vp, samples: int) -> np.ndarray:
    vm, vp = np.broadcast_arrays(np.asarray(vm, dtype=float), np.asarray(vp, dtype=float))
    theta = np.linspace(0.0, 1.0, samples)
    pts = vm[..., None] + theta * (vp - vm)[..., None]
    return np.max(np.abs(np.asarray(dF(pts), dtype=float) * np.ones_like(pts)), axis=-1)


def convection_flux(F: Callable, dF: Callable, v_minus, v_plus, samples: int = 9, scale: float = 1.0):
    """Local Lax-Friedrichs flux ``(F(v-)+F(v+))/2 - lam/2 (v+ - v-)``.

    ``lam`` bounds ``|F'|`` on the interval between the two states by
    sampling (``samples`` points including both ends).
    """
    vm = np.asarray(v_minus, dtype=float)
    vp = np.asarray(v_plus, dtype=float)
    lam = scale * _wave_speed(dF, vm, vp, samples)
    out = 0.5 * (F(vm) + F(vp)) - 0.5 * lam * (vp - vm)
    return float(out) if np.ndim(out) == 0 else out


# }}}


# {{{ discretisation


def assemble_mass(mesh: Mesh1D, k: int) -> sp.dia_matrix:
    """Modal mass matrix: diagonal ``h/(2p+1)`` repeated per element."""
    return sp.diags(np.tile(mesh.h / (2 * np.arange(k + 1) + 1.0), mesh.N))


@dataclass
class LDGDiscretization:
    """Pre-assembled structural operators for one mesh and polynomial degree.

    Interfaces are numbered ``0..N`` here (0-based); interface ``i`` is the
    left end of element ``i``.
    """

    mesh: Mesh1D
    k: int
    flux: FluxSpec = field(default_factory=FluxSpec)
    riesz: RieszOperator | None = None
    quad_points: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("the LDG scheme needs k >= 1")
        if self.riesz is not None:
            if self.riesz.mesh != self.mesh or self.riesz.k != self.k:
                raise ValueError("Riesz operator was assembled on a different mesh or degree")
        N, nb = self.mesh.N, self.k + 1
        self.ndof = N * nb
        h = self.mesh.h
        rule = gauss_rule(self.quad_points or 2 * self.k + 2)
        self.rule = rule
        self.xq = self.mesh.map_to_physical(rule.nodes)  # (N, q)
        P = legendre_vandermonde(self.k, rule.nodes)
        dP = legendre_vandermonde(self.k, rule.nodes, deriv=1)
        eye = sp.identity(N, format="csr")
        # values at quadrature points, and (w_g P_p'(r_g)) test-derivative volume form
        self.Qv = sp.kron(eye, sp.csr_matrix(P), format="csr")
        self.Gt = sp.kron(eye, sp.csr_matrix((dP * rule.weights[:, None]).T), format="csr")
        # (f, phi_p) with f sampled at quadrature points
        self.Vt = sp.kron(eye, sp.csr_matrix((P * rule.weights[:, None]).T * (h / 2)), format="csr")
        signs = (-1.0) ** np.arange(nb)
        self.Tm = sp.kron(eye, sp.csr_matrix(np.ones((1, nb))), format="csr")  # right traces
        self.Tp = sp.kron(eye, sp.csr_matrix(signs[None, :]), format="csr")  # left traces
        # face value at interface i -> tests: +P_p(1) on element i-1, -P_p(-1) on element i
        rows, cols, vals = [], [], []
        for s in range(N):
            for p in range(nb):
                rows += [s * nb + p, s * nb + p]
                cols += [s + 1, s]
                vals += [1.0, -signs[p]]
        self.Ft = sp.csr_matrix((vals, (rows, cols)), shape=(self.ndof, N + 1))
        self.mass_diag = np.tile(h / (2 * np.arange(nb) + 1.0), N)
        self.Minv = sp.diags(1.0 / self.mass_diag)

        # interface selectors: V^- (interior only), V^+ (interior only)
        zero_row = sp.csr_matrix((1, self.ndof))
        self.Pm_int = sp.vstack([zero_row, self.Tm[:-1], zero_row], format="csr")
        self.Pp_int = sp.vstack([zero_row, self.Tp[1:], zero_row], format="csr")
        # full one-sided traces including the boundary side that exists
        self.Pm = sp.vstack([zero_row, self.Tm], format="csr")
        self.Pp = sp.vstack([self.Tp, zero_row], format="csr")
        bsel = np.zeros((N + 1, 2))
        bsel[0, 0] = bsel[N, 1] = 1.0
        self.Bsel = sp.csr_matrix(bsel)
        # auxiliary trace: E^+ inside and at the left end, E^- at the right end
        self.Aux = sp.vstack([self.Tp, self.Tm[-1]], format="csr")
        # penalty (sigma/h)[[V]] at the two ends with outside state = data
        pen = np.zeros((N + 1, self.ndof))
        pen[0] = self.Tp[0].toarray()
        pen[N] = -self.Tm[-1].toarray()
        self.Pen = sp.csr_matrix(pen * self.flux.sigma / h)
        self.pen_data = sp.csr_matrix(np.array([[-1.0, 0.0]] + [[0.0, 0.0]] * (N - 1) + [[0.0, 1.0]])
                                      * self.flux.sigma / h)
        # weak derivative with V_hat = V^- (data at the ends)
        self.DV = (self.Minv @ (self.Ft @ self.Pm_int - self.Gt @ self.Qv)).tocsr()
        self.DV_data = (self.Minv @ self.Ft @ self.Bsel).tocsr()
        self.DAux = (self.Ft @ self.Aux - self.Gt @ self.Qv).tocsr()
        self._frac_cache: tuple | None = None

    # -- helpers

    def gf(self, vec) -> GridFunction:
        return GridFunction.from_vector(self.mesh, self.k, vec)

    def project(self, f: Callable, q: int | None = None) -> np.ndarray:
        from .basis import l2_project

        return l2_project(f, self.mesh, self.k, q or self.k + 4).vector

    def mass_apply(self, vec) -> np.ndarray:
        return self.mass_diag * vec

    # -- auxiliary variables

    def aux_R(self, V: np.ndarray, b: float, data=(0.0, 0.0)) -> np.ndarray:
        return math.sqrt(b) * (self.DV @ V + self.DV_data @ np.asarray(data, dtype=float))

    def aux_E(self, R: np.ndarray) -> np.ndarray:
        if self.riesz is None:
            raise ValueError("no Riesz operator assembled")
        if self.riesz.matrix.shape[0] != len(R):
            raise ValueError("Riesz matrix and coefficient vector dimensions differ")
        return (self.riesz.matrix @ R) / self.mass_diag

    def aux_L(self, V: np.ndarray, problem: PDEProblem, data=(0.0, 0.0)) -> np.ndarray:
        Vq = self.Qv @ V
        phi_face = np.empty(self.mesh.N + 1)
        phi_face[1:-1] = problem.eval_phi(self.Tm[:-1] @ V)
        phi_face[[0, -1]] = problem.eval_phi(np.asarray(data, dtype=float))
        return (self.Ft @ phi_face - self.Gt @ problem.eval_phi(Vq)) / self.mass_diag

    # -- weak forms (tested against the basis, no mass inverse)

    def weak_convection(self, V: np.ndarray, problem: PDEProblem, data, lam=None) -> tuple[np.ndarray, np.ndarray]:
        """Weak convection term and the LLF wave speeds per interface (or the given frozen ones)."""
        vm = self.Pm @ V
        vp = self.Pp @ V
        vm[0], vp[-1] = data
        if lam is None:
            lam = self.flux.viscosity_scale * _wave_speed(problem.dF, vm, vp, self.flux.samples)
        Fhat = 0.5 * (problem.F(vm) + problem.F(vp)) - 0.5 * lam * (vp - vm)
        vol = self.Gt @ np.asarray(problem.F(self.Qv @ V), dtype=float)
        return vol - self.Ft @ Fhat, lam

    def jac_convection(self, V: np.ndarray, problem: PDEProblem, lam: np.ndarray) -> sp.csr_matrix:
        vm = self.Pm @ V
        vp = self.Pp @ V
        dFq = np.asarray(problem.dF(self.Qv @ V), dtype=float) * np.ones(self.Qv.shape[0])
        dm = 0.5 * (np.asarray(problem.dF(vm)) * np.ones_like(vm) + lam)
        dp = 0.5 * (np.asarray(problem.dF(vp)) * np.ones_like(vp) - lam)
        # boundary rows of Pm / Pp are zero: the outside state there is data
        dFhat = sp.diags(dm) @ self.Pm + sp.diags(dp) @ self.Pp
        return (self.Gt @ sp.diags(dFq) @ self.Qv - self.Ft @ dFhat).tocsr()

    def diffusion_coefficients(self, V: np.ndarray, problem: PDEProblem, data):
        """Frozen sqrt(S) at quadrature points and at interfaces (average state)."""
        vm = self.Pm @ V
        vp = self.Pp @ V
        vm[0], vp[-1] = data
        return problem.eval_sqrt_S(self.Qv @ V), problem.eval_sqrt_S(0.5 * (vm + vp))

    def weak_diffusion(self, V: np.ndarray, problem: PDEProblem, data, coeffs=None) -> np.ndarray:
        sq, sf = coeffs if coeffs is not None else self.diffusion_coefficients(V, problem, data)
        if not (np.any(sq) or np.any(sf)):
            return np.zeros(self.ndof)
        L = self.aux_L(V, problem, data)
        Lhat = self.Aux @ L + self.Pen @ V + self.pen_data @ np.asarray(data, dtype=float)
        return self.Ft @ (sf * Lhat) - self.Gt @ (sq * (self.Qv @ L))

    def jac_diffusion(self, V: np.ndarray, problem: PDEProblem, coeffs) -> sp.csr_matrix:
        sq, sf = coeffs
        if not (np.any(sq) or np.any(sf)):
            return sp.csr_matrix((self.ndof, self.ndof))
        s_minus = np.zeros(self.mesh.N + 1)
        s_minus[1:-1] = problem.eval_sqrt_S(self.Tm[:-1] @ V)
        dL = self.Minv @ (self.Ft @ sp.diags(s_minus) @ self.Pm_int
                          - self.Gt @ sp.diags(problem.eval_sqrt_S(self.Qv @ V)) @ self.Qv)
        return (self.Ft @ sp.diags(sf) @ (self.Aux @ dL + self.Pen)
                - self.Gt @ sp.diags(sq) @ self.Qv @ dL).tocsr()

    def _frac_operators(self, b: float):
        if self._frac_cache is None or self._frac_cache[0] != b:
            if b == 0.0 or self.riesz is None:
                K = np.zeros((self.ndof, self.ndof))
                Kd = np.zeros((self.ndof, 2))
            else:
                A = self.riesz.matrix
                sb = math.sqrt(b)
                MinvA = A / self.mass_diag[:, None]
                K = b * (self.DAux @ (MinvA @ self.DV.toarray())) + sb * (self.Ft @ self.Pen).toarray()
                Kd = b * (self.DAux @ (MinvA @ self.DV_data.toarray())) + sb * (self.Ft @ self.pen_data).toarray()
            self._frac_cache = (b, K, Kd)
        return self._frac_cache[1], self._frac_cache[2]

    def weak_fractional(self, V: np.ndarray, b: float, data) -> np.ndarray:
        K, Kd = self._frac_operators(b)
        return K @ V + Kd @ np.asarray(data, dtype=float)

    def weak_source(self, g: Callable | None, t: float) -> np.ndarray:
        if g is None:
            return np.zeros(self.ndof)
        gx = np.asarray(g(self.xq, t), dtype=float) * np.ones_like(self.xq)
        return self.Vt @ gx.reshape(-1)

    def weak_operator(self, V: np.ndarray, t: float, problem: PDEProblem, with_source: bool = True) -> np.ndarray:
        data = problem.boundary_data(t)
        conv, _ = self.weak_convection(V, problem, data)
        out = conv + self.weak_diffusion(V, problem, data) + self.weak_fractional(V, problem.b, data)
        if with_source:
            out = out + self.weak_source(problem.g, t)
        return out

    def spatial_rhs(self, V: np.ndarray, t: float, problem: PDEProblem, with_source: bool = True) -> np.ndarray:
        return self.weak_operator(V, t, problem, with_source) / self.mass_diag


# }}}


# {{{ functional wrappers


def _check_gf(V: GridFunction, disc: LDGDiscretization) -> None:
    if V.mesh != disc.mesh or V.k != disc.k:
        raise ValueError("grid function lives on a different mesh or degree")


def solve_aux_R(V: GridFunction, flux: FluxSpec, b: float, data=(0.0, 0.0)) -> GridFunction:
    """``R = sqrt(b)`` times the weak derivative of ``V`` with ``V_hat = V^-``."""
    if b < 0:
        raise ValueError("fractional diffusion strength must be >= 0")
    disc = LDGDiscretization(V.mesh, V.k, flux)
    return disc.gf(disc.aux_R(V.vector, b, data))


def solve_aux_E(R: GridFunction, riesz: RieszOperator) -> GridFunction:
    if riesz.mesh != R.mesh or riesz.k != R.k:
        raise ValueError("Riesz operator and grid function dimensions differ")
    disc = LDGDiscretization(R.mesh, R.k, riesz=riesz)
    return disc.gf(disc.aux_E(R.vector))


def solve_aux_L(V: GridFunction, problem: PDEProblem, flux: FluxSpec, t: float = 0.0) -> GridFunction:
    disc = LDGDiscretization(V.mesh, V.k, flux)
    return disc.gf(disc.aux_L(V.vector, problem, problem.boundary_data(t)))


def spatial_rhs(
    V: GridFunction, t: float, problem: PDEProblem, flux: FluxSpec, riesz: RieszOperator | None
) -> GridFunction:
    disc = LDGDiscretization(V.mesh, V.k, flux, riesz)
    return disc.gf(disc.spatial_rhs(V.vector, t, problem))


# }}}
