"""Legendre modal basis on uniform 1D meshes.

Everything here lives on the reference element [-1, 1]; an element
``s`` of a :class:`Mesh1D` is reached through the affine map
``x = x_s + (1 + r) h / 2``.  Grid functions store one row of modal
Legendre coefficients per element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_EDGE_TOL = 1e-14


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def npoints(self) -> int:
        return len(self.nodes)


def gauss_rule(q: int) -> QuadRule:
    """Gauss-Legendre rule with ``q`` points, exact up to degree ``2q - 1``."""
    if q < 1:
        raise ValueError(f"a Gauss rule needs at least one point, got q={q}")
    x, w = np.polynomial.legendre.leggauss(q)
    return QuadRule(x, w)


def legendre_eval(n: int, x, deriv: int = 0):
    """Evaluate ``P_n`` (``deriv=0``) or ``P_n'`` (``deriv=1``) at ``x``.

    Uses the Bonnet recurrence for the values and
    ``P_n' = n P_{n-1} + x P_{n-1}'`` for the derivative.  Accepts
    scalars or arrays.
    """
    if n < 0:
        raise ValueError(f"Legendre degree must be non-negative, got {n}")
    if deriv not in (0, 1):
        raise ValueError("only deriv=0 or deriv=1 is supported")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + _EDGE_TOL):
        raise ValueError("Legendre evaluation point outside [-1, 1]")

    p_prev, p = np.zeros_like(xa), np.ones_like(xa)
    dp_prev, dp = np.zeros_like(xa), np.zeros_like(xa)
    for m in range(1, n + 1):
        p_next = ((2 * m - 1) * xa * p - (m - 1) * p_prev) / m
        dp_next = m * p + xa * dp
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    out = dp if deriv else p
    return float(out) if np.ndim(out) == 0 else out


def legendre_vandermonde(k: int, r, deriv: int = 0) -> np.ndarray:
    """Matrix ``V[i, p] = P_p^{(deriv)}(r_i)`` for ``p = 0..k``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    return np.stack([legendre_eval(p, r, deriv) for p in range(k + 1)], axis=-1)


@dataclass(frozen=True)
class Mesh1D:
    x_left: float
    x_right: float
    num_elements: int

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("mesh needs at least one element")
        if not self.x_right > self.x_left:
            raise ValueError("mesh needs x_right > x_left")

    @property
    def N(self) -> int:
        return self.num_elements

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / self.num_elements

    @property
    def vertices(self) -> np.ndarray:
        return self.x_left + self.h * np.arange(self.num_elements + 1)

    def element_bounds(self, s: int) -> tuple[float, float]:
        """Endpoints of element ``s`` (0-based)."""
        a = self.x_left + s * self.h
        return a, a + self.h

    def map_to_physical(self, r) -> np.ndarray:
        """Physical coordinates of reference points ``r``, shape ``(N, len(r))``."""
        r = np.asarray(r, dtype=float)
        left = self.vertices[:-1]
        return left[:, None] + 0.5 * (1.0 + r[None, :]) * self.h

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Element index and reference coordinate of physical points."""
        x = np.asarray(x, dtype=float)
        t = (x - self.x_left) / self.h
        s = np.clip(np.floor(t).astype(int), 0, self.num_elements - 1)
        r = 2.0 * (t - s) - 1.0
        return s, np.clip(r, -1.0, 1.0)


@dataclass(frozen=True)
class GridFunction:
    mesh: Mesh1D
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != self.mesh.N:
            raise ValueError(
                f"coefficients must have shape (N, k+1) with N={self.mesh.N}, got {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def k(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @classmethod
    def zeros(cls, mesh: Mesh1D, k: int) -> "GridFunction":
        return cls(mesh, np.zeros((mesh.N, k + 1)))

    @classmethod
    def from_vector(cls, mesh: Mesh1D, k: int, vec) -> "GridFunction":
        return cls(mesh, np.asarray(vec, dtype=float).reshape(mesh.N, k + 1))

    def __call__(self, x):
        s, r = self.mesh.locate(x)
        vals = legendre_vandermonde(self.k, np.ravel(r))
        out = np.einsum("ip,ip->i", vals, self.coeffs[np.ravel(s)])
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])

    def right_traces(self) -> np.ndarray:
        """Value at the right end of every element (``V^-`` at interface s+1)."""
        return self.coeffs.sum(axis=1)

    def left_traces(self) -> np.ndarray:
        """Value at the left end of every element (``V^+`` at interface s)."""
        signs = (-1.0) ** np.arange(self.k + 1)
        return self.coeffs @ signs


def trace(gf: GridFunction, interface: int, side: str) -> float:
    """One-sided limit at interface ``interface`` (1-based, ``1..N+1``).

    ``side='minus'`` is the limit from the element on the left,
    ``side='plus'`` from the element on the right.
    """
    N = gf.mesh.N
    if not 1 <= interface <= N + 1:
        raise ValueError(f"interface index must lie in 1..{N + 1}, got {interface}")
    if side == "minus":
        if interface == 1:
            raise ValueError("the left boundary has no minus-side trace")
        return float(gf.right_traces()[interface - 2])
    if side == "plus":
        if interface == N + 1:
            raise ValueError("the right boundary has no plus-side trace")
        return float(gf.left_traces()[interface - 1])
    raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")


def jump(gf: GridFunction, interface: int) -> float:
    """``[[V]] = V^+ - V^-`` at an interior interface."""
    return trace(gf, interface, "plus") - trace(gf, interface, "minus")


def average(gf: GridFunction, interface: int) -> float:
    return 0.5 * (trace(gf, interface, "plus") + trace(gf, interface, "minus"))


def l2_project(f: Callable, mesh: Mesh1D, k: int, q: int | None = None) -> GridFunction:
    """Element-wise L2 projection onto polynomials of degree ``k``."""
    rule = gauss_rule(q if q is not None else k + 2)
    x = mesh.map_to_physical(rule.nodes)
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    P = legendre_vandermonde(k, rule.nodes)
    scale = (2 * np.arange(k + 1) + 1) / 2.0
    coeffs = (fx * rule.weights) @ P * scale
    return GridFunction(mesh, coeffs)


def gauss_radau_project(
    f: Callable, mesh: Mesh1D, k: int, side: str = "minus", q: int | None = None
) -> GridFunction:
    """Gauss-Radau projection: orthogonal to degrees ``< k``, exact at one end.

    ``side='minus'`` interpolates at the right endpoint of each element,
    ``side='plus'`` at the left endpoint.
    """
    if k < 1:
        raise ValueError(
            "Gauss-Radau projection needs k >= 1: with k = 0 the endpoint "
            "condition consumes the only degree of freedom"
        )
    if side not in ("minus", "plus"):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    base = l2_project(f, mesh, k, q if q is not None else k + 4).coeffs.copy()
    if side == "minus":
        ends, sign = mesh.vertices[1:], 1.0
    else:
        ends, sign = mesh.vertices[:-1], -1.0
    fend = np.asarray(f(ends), dtype=float) * np.ones_like(ends)
    signs = sign ** np.arange(k)
    partial = base[:, :k] @ signs
    base[:, k] = (fend - partial) / sign**k
    return GridFunction(mesh, base)


def l2_norm(gf: GridFunction, q: int | None = None) -> float:
    # Modal coefficients make the norm exact without quadrature.
    h = gf.mesh.h
    mass = h / (2 * np.arange(gf.k + 1) + 1)
    return float(np.sqrt(np.sum(gf.coeffs**2 * mass)))


def l2_error(gf: GridFunction, f_exact: Callable, q: int | None = None) -> float:
    """``||f_exact - gf||`` on the mesh by Gauss quadrature (default ``k + 3`` points)."""
    rule = gauss_rule(q if q is not None else gf.k + 3)
    x = gf.mesh.map_to_physical(rule.nodes)
    fx = np.asarray(f_exact(x), dtype=float) * np.ones_like(x)
    uh = gf.coeffs @ legendre_vandermonde(gf.k, rule.nodes).T
    err2 = np.sum((fx - uh) ** 2 * rule.weights) * gf.mesh.h / 2.0
    return float(np.sqrt(err2))
