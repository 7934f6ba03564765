"""Fractional calculus kernels.

Caputo L1 weights and the midpoint rule over the order ``alpha`` for
distributed-order derivatives, closed-form Caputo derivatives of the
time factors used by the manufactured solutions, Riemann-Liouville
integrals of shifted monomials, and closed-form evaluation of the Riesz
potential / fractional Laplacian of compactly supported piecewise
polynomials.

Conventions: for ``1 < beta < 2`` put ``mu = 2 - beta``.  The Riesz
potential is

    Lop f = (I_left^mu f + I_right^mu f) / (2 cos(mu pi / 2))
          = 1 / (2 cos(mu pi / 2) Gamma(mu)) * int |x - s|^(mu - 1) f(s) ds,

which has Fourier symbol ``|w|^-mu`` and tends to the identity as
``mu -> 0``.  The fractional Laplacian is ``-(-Lap)^(beta/2) V = d/dx Lop V'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

_ORDER_QUAD = np.polynomial.legendre.leggauss(48)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"time-fractional order must lie in (0, 1], got {alpha}")


def riesz_constant(mu: float) -> float:
    return 1.0 / (2.0 * math.cos(0.5 * math.pi * mu))


# {{{ time grid and L1 weights


@dataclass(frozen=True)
class TimeGrid:
    T: float
    num_steps: int

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("time grid needs at least one step")
        if not self.T > 0:
            raise ValueError("final time must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.num_steps

    @property
    def times(self) -> np.ndarray:
        t = self.dt * np.arange(self.num_steps + 1)
        t[-1] = self.T
        return t


def l1_coefficients(alpha: float, n: int) -> np.ndarray:
    """L1 weights ``a_l = (l+1)^(1-alpha) - l^(1-alpha)`` for ``l = 0..n-1``.

    At ``alpha = 1`` the formula degenerates; the backward-difference
    limit ``a_0 = 1, a_l = 0`` is returned.
    """
    _check_alpha(alpha)
    if n < 1:
        raise ValueError("need at least one L1 coefficient")
    if alpha == 1.0:
        a = np.zeros(n)
        a[0] = 1.0
        return a
    l = np.arange(n, dtype=float)
    return (l + 1.0) ** (1.0 - alpha) - l ** (1.0 - alpha)


def l1_lambda(alpha: float, dt: float) -> float:
    return dt**alpha * math.gamma(2.0 - alpha)


def caputo_l1_apply(y: Sequence[float], alpha: float, dt: float) -> float:
    """L1 approximation of the Caputo derivative at the last sample of ``y``."""
    y = np.asarray(y, dtype=float)
    n = len(y) - 1
    if n < 1:
        raise ValueError("the L1 formula needs at least two samples")
    if dt <= 0:
        raise ValueError("time step must be positive")
    a = l1_coefficients(alpha, n + 1)
    l = np.arange(1, n)
    hist = np.dot(a[n - l - 1] - a[n - l], y[1:n]) + a[n - 1] * y[0]
    return (y[n] - hist) / l1_lambda(alpha, dt)


# }}}

# {{{ distributed-order rule


def uniform_weight(alpha):
    return np.ones_like(np.asarray(alpha, dtype=float))


@dataclass(frozen=True)
class DistributedRule:
    """Quadrature in the fractional order combined with L1 in time.

    The composite operator is ``sum_j W(alpha_j) dpi_j delta_t^{alpha_j}``.
    A single-order derivative is the special case of one node with unit
    weight (``single=True``); it bypasses the midpoint rule entirely.
    """

    nodes: np.ndarray
    widths: np.ndarray
    weight_values: np.ndarray
    dt: float
    weight_fn: Callable = uniform_weight
    single: bool = False

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def p(self) -> float:
        return float(self.widths[0])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([l1_lambda(a, self.dt) for a in self.nodes])

    @property
    def effective_weights(self) -> np.ndarray:
        """``w_j = W(alpha_j) dpi_j / lambda_j``."""
        return self.weight_values * self.widths / self.lambdas

    @property
    def omega(self) -> float:
        return float(np.sum(self.effective_weights))

    @property
    def Q(self) -> float:
        return 1.0 / self.omega

    def l1_table(self, n: int) -> np.ndarray:
        """``a_l^{alpha_j}`` for every node (rows) and ``l = 0..n-1``."""
        return np.stack([l1_coefficients(a, n) for a in self.nodes])

    def apply(self, y: Sequence[float]) -> float:
        """Composite discrete operator at the last sample of ``y``."""
        vals = [caputo_l1_apply(y, a, self.dt) for a in self.nodes]
        return float(np.dot(self.weight_values * self.widths, vals))

    def integrate_orders(self, fn: Callable[[float], float]) -> float:
        """Exact-in-order counterpart: ``int_0^1 W(a) fn(a) da`` (or ``fn(alpha)``)."""
        if self.single:
            return float(fn(float(self.nodes[0])))
        x, w = _ORDER_QUAD
        a = 0.5 * (x + 1.0)
        vals = np.array([fn(ai) for ai in a])
        return float(0.5 * np.sum(w * self.weight_fn(a) * vals))


def distributed_rule(M_q: int, W: Callable = uniform_weight, dt: float = 1.0) -> DistributedRule:
    """Midpoint rule with ``M_q`` panels on ``[0, 1]`` for the order integral."""
    if M_q < 1:
        raise ValueError("distributed rule needs at least one node")
    j = np.arange(1, M_q + 1)
    nodes = (2 * j - 1) / (2.0 * M_q)
    wv = np.asarray(W(nodes), dtype=float) * np.ones(M_q)
    if np.any(wv < 0):
        raise ValueError("order weight function must be non-negative")
    return DistributedRule(nodes, np.full(M_q, 1.0 / M_q), wv, dt, W)


def single_order_rule(alpha: float, dt: float = 1.0) -> DistributedRule:
    _check_alpha(alpha)
    return DistributedRule(
        np.array([alpha]), np.ones(1), np.ones(1), dt, uniform_weight, single=True
    )


# }}}

# {{{ closed-form Caputo derivatives


def caputo_monomial_exact(m: int, alpha: float, t):
    """Caputo derivative of ``t^m``: ``Gamma(m+1)/Gamma(m+1-alpha) t^(m-alpha)``."""
    if m < 0:
        raise ValueError("monomial degree must be non-negative")
    _check_alpha(alpha)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Caputo derivative requested at negative time")
    if m == 0:
        out = np.zeros_like(t)
    else:
        out = math.gamma(m + 1) / math.gamma(m + 1 - alpha) * t ** (m - alpha)
    return float(out) if out.ndim == 0 else out


def caputo_exp_decay(alpha: float, t: float, tol: float = 1e-17) -> float:
    """Caputo derivative of ``exp(-t)`` by its power series.

    ``D^alpha e^{-t} = sum_{k>=1} (-1)^k t^(k-alpha) / Gamma(k+1-alpha)``.
    """
    _check_alpha(alpha)
    if t < 0:
        raise ValueError("Caputo derivative requested at negative time")
    if alpha == 1.0:
        return -math.exp(-t)
    if t == 0.0:
        return 0.0
    total, k = 0.0, 1
    while True:
        term = (-1) ** k * math.exp((k - alpha) * math.log(t) - special.gammaln(k + 1 - alpha))
        total += term
        if abs(term) < tol * max(abs(total), 1e-300) and k > t:
            return total
        k += 1


def caputo_quadrature(dy: Callable[[float], float], alpha: float, t: float) -> float:
    """Caputo derivative from its defining integral (adaptive, endpoint-weighted)."""
    _check_alpha(alpha)
    if t == 0.0:
        return 0.0
    val, _ = integrate.quad(
        dy, 0.0, t, weight="alg", wvar=(0.0, -alpha), epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return val / math.gamma(1.0 - alpha)


# }}}

# {{{ Riemann-Liouville integrals of monomials


def rl_integral_shifted_monomial(a: float, kdeg: int, mu: float, x, direction: str = "left"):
    """RL integral of order ``mu`` of ``(s - a)^k`` (left) or ``(a - s)^k`` (right).

    Left:  ``Gamma(k+1)/Gamma(k+1+mu) (x - a)^(k+mu)`` for ``x >= a``.
    Right: same with ``a - x`` for ``x <= a``.
    """
    if mu <= 0:
        raise ValueError("integral order must be positive")
    x = np.asarray(x, dtype=float)
    if direction == "left":
        d = x - a
    elif direction == "right":
        d = a - x
    else:
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
    if np.any(d < 0):
        raise ValueError(f"{direction} RL integral evaluated on the wrong side of its anchor")
    out = math.exp(special.gammaln(kdeg + 1) - special.gammaln(kdeg + 1 + mu)) * d ** (kdeg + mu)
    return float(out) if out.ndim == 0 else out


# }}}

# {{{ piecewise polynomials and the Riesz potential


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomials on consecutive intervals, zero outside ``[breaks[0], breaks[-1]]``."""

    breaks: np.ndarray
    pieces: tuple[Polynomial, ...]

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        if len(b) != len(self.pieces) + 1 or np.any(np.diff(b) <= 0):
            raise ValueError("need strictly increasing breaks, one more than pieces")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "pieces", tuple(p if isinstance(p, Polynomial) else Polynomial(p) for p in self.pieces))

    @classmethod
    def single(cls, poly, a: float, b: float) -> "PiecewisePolynomial":
        return cls(np.array([a, b]), (poly if isinstance(poly, Polynomial) else Polynomial(poly),))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for i, p in enumerate(self.pieces):
            lo, hi = self.breaks[i], self.breaks[i + 1]
            last = i == len(self.pieces) - 1
            mask = (x >= lo) & ((x <= hi) if last else (x < hi))
            out = np.where(mask, p(x), out)
        return float(out) if out.ndim == 0 else out

    def deriv(self, m: int = 1) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breaks, tuple(p.deriv(m) for p in self.pieces))

    def _padded(self) -> list[Polynomial]:
        zero = Polynomial([0.0])
        return [zero, *self.pieces, zero]

    def left_jumps(self) -> list[tuple[float, np.ndarray]]:
        """``f = sum_i J_i(s - c_i) H(s - c_i)``; returns ``(c_i, coeffs of J_i)``."""
        P = self._padded()
        out = []
        for i, c in enumerate(self.breaks):
            q = P[i + 1] - P[i]
            shifted = q(Polynomial([c, 1.0]))
            out.append((float(c), _trim(shifted.coef)))
        return out

    def right_jumps(self) -> list[tuple[float, np.ndarray]]:
        """``f = sum_i K_i(c_i - s) H(c_i - s)``; returns ``(c_i, coeffs of K_i)``."""
        P = self._padded()
        out = []
        for i, c in enumerate(self.breaks):
            q = P[i] - P[i + 1]
            shifted = q(Polynomial([c, -1.0]))
            out.append((float(c), _trim(shifted.coef)))
        return out

    def scale(self) -> float:
        return max(float(np.max(np.abs(p.coef))) for p in self.pieces)


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return c if len(c) else np.zeros(1)


def _mp_power_sum(x, jumps, mu, sign, deriv: bool, dps: int):
    """Sum of ``g_m coef (+-(x - c))_+^(m + mu [- 1])`` over all jump terms."""
    with mpmath.workdps(dps):
        mu_mp = mpmath.mpf(mu)
        total = mpmath.mpf(0)
        xm = mpmath.mpf(float(x))
        for c, coefs in jumps:
            d = (xm - mpmath.mpf(c)) * sign
            if d <= 0:
                continue
            for m, cm in enumerate(coefs):
                if cm == 0.0 or (deriv and m == 0):
                    continue
                if deriv:
                    g = mpmath.gamma(m + 1) / mpmath.gamma(m + mu_mp)
                    total += sign * mpmath.mpf(cm) * g * d ** (m + mu_mp - 1)
                else:
                    g = mpmath.gamma(m + 1) / mpmath.gamma(m + 1 + mu_mp)
                    total += mpmath.mpf(cm) * g * d ** (m + mu_mp)
        return total


def riesz_potential(f: PiecewisePolynomial, mu: float, x, dps: int = 40):
    """Closed-form ``Lop f`` for a compactly supported piecewise polynomial."""
    if not 0.0 < mu < 1.0:
        raise ValueError("Riesz potential order must lie in (0, 1)")
    lj, rj = f.left_jumps(), f.right_jumps()
    xs = np.asarray(x, dtype=float).ravel()
    out = np.empty_like(xs)
    const = riesz_constant(mu)
    for i, xi in enumerate(xs):
        v = _mp_power_sum(xi, lj, mu, 1, False, dps) + _mp_power_sum(xi, rj, mu, -1, False, dps)
        out[i] = const * float(v)
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def riesz_potential_quadrature(f: Callable, support: Sequence[float], mu: float, x: float) -> float:
    """Adaptive-quadrature oracle for ``Lop f`` at one point.

    ``support`` lists the breakpoints of ``f``; pieces are split at ``x`` so
    the algebraic endpoint weight absorbs the kernel singularity.
    """
    pts = sorted(set(float(s) for s in support) | {float(x)})
    pts = [p for p in pts if min(support) <= p <= max(support)]
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=200)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= x:
            # kernel (x - s)^(mu-1), singular at s = hi only when hi == x
            val, _ = integrate.quad(f, lo, hi, weight="alg", wvar=(0.0, mu - 1.0), **opts) \
                if hi == x else integrate.quad(lambda s: f(s) * (x - s) ** (mu - 1.0), lo, hi, **opts)
        else:
            val, _ = integrate.quad(f, lo, hi, weight="alg", wvar=(mu - 1.0, 0.0), **opts) \
                if lo == x else integrate.quad(lambda s: f(s) * (s - x) ** (mu - 1.0), lo, hi, **opts)
        total += val
    return riesz_constant(mu) * total / math.gamma(mu)


class SmoothnessError(ValueError):
    pass


def _check_vanishing(f: PiecewisePolynomial, what: str, tol: float = 1e-12) -> None:
    scale = max(f.scale(), 1.0)
    for c, coefs in f.left_jumps():
        if abs(coefs[0]) > tol * scale:
            raise SmoothnessError(
                f"{what} jumps by {coefs[0]:.3e} at x={c}; the fractional "
                "Laplacian form used here needs it continuous with compact support"
            )


def riesz_apply_to_polynomial(
    V: PiecewisePolynomial, beta: float, *, allow_boundary_values: bool = False
) -> Callable:
    """Evaluator of ``-(-Lap)^(beta/2) V = d/dx Lop V'`` in closed form.

    ``V`` and ``V'`` must be continuous and vanish at the ends of the
    support.  With ``allow_boundary_values=True`` only ``V'`` is checked;
    the operator then acts on ``V'`` restricted to the support, which is
    what an LDG discretisation on a bounded domain sees when ``V`` carries
    nonzero Dirichlet data.
    """
    if not 1.0 < beta < 2.0:
        raise ValueError(f"spatial order must lie in (1, 2), got {beta}")
    mu = 2.0 - beta
    dV = V.deriv()
    if not allow_boundary_values:
        _check_vanishing(V, "V")
    _check_vanishing(dV, "V'")
    lj, rj = dV.left_jumps(), dV.right_jumps()
    const = riesz_constant(mu)

    def evaluate(x, dps: int = 40):
        xs = np.asarray(x, dtype=float).ravel()
        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            v = _mp_power_sum(xi, lj, mu, 1, True, dps) + _mp_power_sum(xi, rj, mu, -1, True, dps)
            out[i] = const * float(v)
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    return evaluate


# }}}
