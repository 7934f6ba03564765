"""Dense Galerkin matrix of the Riesz potential on a uniform mesh.

Entries are ``A[(s,p),(r,q)] = (Lop zeta_{q,r}, zeta_{p,s})``.  On a
uniform mesh they depend only on the element offset ``d = s - r`` and
scale like ``h^(1 + mu)``, so each offset block is computed once on
unit-width elements:

* ``|d| <= 1``: closed form.  The RL integrals of the trial Legendre
  piece are sums of ``(x - c)_+^(m + mu)`` terms; these are integrated
  exactly against the test polynomial.
* ``|d| >= 2``: the kernel ``|x - s|^(mu - 1)`` is smooth on the pair of
  elements, and a tensor Gauss rule converges geometrically.  The closed
  form is not used there because its shifted-monomial terms cancel
  catastrophically for distant elements.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from .basis import Mesh1D, gauss_rule, legendre_vandermonde
from .fractional import riesz_constant


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class RieszOperator:
    beta: float
    mesh: Mesh1D
    k: int
    matrix: np.ndarray = field(repr=False)

    @property
    def mu(self) -> float:
        return 2.0 - self.beta


def _shifted_legendre(p: int) -> Polynomial:
    """``P_p(2x - 1)`` as a polynomial in ``x`` (unit element ``[0, 1]``)."""
    coef = np.zeros(p + 1)
    coef[p] = 1.0
    leg = np.polynomial.Legendre(coef).convert(kind=Polynomial)
    return leg(Polynomial([-1.0, 2.0]))


def _coeffs_about(poly: Polynomial, c: float, sign: float) -> np.ndarray:
    """Coefficients of ``poly`` in powers of ``sign * (x - c)``."""
    return poly(Polynomial([c, sign])).coef


def _near_block(d: int, k: int, mu: float) -> np.ndarray:
    polys = [_shifted_legendre(p) for p in range(k + 1)]
    lg = lambda m: math.exp(special.gammaln(m + 1) - special.gammaln(m + 1 + mu))

    def outer(p: int, c: float, nu: float, sign: float) -> float:
        # int_d^{d+1} zeta_p(x) (sign*(x - c))_+^nu dx
        lo, hi = float(d), float(d + 1)
        if sign > 0:
            lo = max(lo, c)
        else:
            hi = min(hi, c)
        if hi <= lo:
            return 0.0
        test = polys[p](Polynomial([-d, 1.0]))  # zeta_p as polynomial in x
        g = _coeffs_about(test, c, sign)
        ya, yb = sign * (lo - c), sign * (hi - c)
        if sign < 0:
            ya, yb = yb, ya
        total = 0.0
        for j, gj in enumerate(g):
            e = j + nu + 1.0
            total += gj * (yb**e - ya**e) / e
        return total

    B = np.zeros((k + 1, k + 1))
    for q in range(k + 1):
        terms = []
        # left integral: + sum at c=0, - sum at c=1 (powers of x - c)
        for c, sgn in ((0.0, 1.0), (1.0, -1.0)):
            for m, a in enumerate(_coeffs_about(polys[q], c, 1.0)):
                terms.append((c, m, sgn * a, 1.0))
        # right integral: + sum at c=1, - sum at c=0 (powers of c - x)
        for c, sgn in ((1.0, 1.0), (0.0, -1.0)):
            for m, a in enumerate(_coeffs_about(polys[q], c, -1.0)):
                terms.append((c, m, sgn * a, -1.0))
        for p in range(k + 1):
            B[p, q] = sum(
                coef * lg(m) * outer(p, c, m + mu, side)
                for c, m, coef, side in terms
                if coef != 0.0
            )
    return riesz_constant(mu) * B


def _far_block(d: int, k: int, mu: float, npts: int) -> np.ndarray:
    rule = gauss_rule(npts)
    s = 0.5 * (rule.nodes + 1.0)
    x = d + s
    P = legendre_vandermonde(k, rule.nodes)
    w = 0.5 * rule.weights
    kern = np.abs(x[:, None] - s[None, :]) ** (mu - 1.0)
    B = (P * w[:, None]).T @ kern @ (P * w[:, None])
    return riesz_constant(mu) / math.gamma(mu) * B


def reference_blocks(N: int, k: int, beta: float, far_points: int | None = None) -> dict[int, np.ndarray]:
    """Unit-element blocks ``B(d)`` for offsets ``d = -(N-1)..N-1``."""
    mu = 2.0 - beta
    npts = far_points if far_points is not None else k + 14
    blocks = {}
    for d in range(-(N - 1), N):
        blocks[d] = _near_block(d, k, mu) if abs(d) <= 1 else _far_block(d, k, mu, npts)
    return blocks


def assemble_riesz_matrix(mesh: Mesh1D, k: int, beta: float, sym_tol: float = 1e-8) -> RieszOperator:
    if not 1.0 < beta < 2.0:
        raise ValueError(f"spatial order must lie in (1, 2), got {beta}")
    if k < 1:
        raise ValueError("the LDG scheme needs k >= 1")
    N, nb = mesh.N, k + 1
    mu = 2.0 - beta
    blocks = reference_blocks(N, k, beta)
    A = np.zeros((N * nb, N * nb))
    for s in range(N):
        for r in range(N):
            A[s * nb:(s + 1) * nb, r * nb:(r + 1) * nb] = blocks[s - r]
    A *= mesh.h ** (1.0 + mu)
    asym = np.max(np.abs(A - A.T)) / max(np.max(np.abs(A)), 1e-300)
    if asym > sym_tol:
        raise AssemblyError(f"Riesz matrix asymmetric (relative {asym:.2e}); assembly is inconsistent")
    return RieszOperator(beta, mesh, k, 0.5 * (A + A.T))


# {{{ dumps


def write_riesz_csv(op: RieszOperator, path) -> None:
    path = Path(path)
    lines = [f"# N={op.mesh.N}, k={op.k}, beta={op.beta!r}"]
    lines += [",".join(repr(float(v)) for v in row) for row in op.matrix]
    path.write_text("\n".join(lines) + "\n")


def write_riesz_binary(op: RieszOperator, path) -> None:
    """Little-endian: int32 N, int32 k, float64 beta, then row-major float64 data."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<iid", op.mesh.N, op.k, op.beta))
        fh.write(np.ascontiguousarray(op.matrix, dtype="<f8").tobytes())


def read_riesz_dump(path) -> tuple[int, int, float, np.ndarray]:
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(b"#"):
        text = raw.decode()
        header, *rows = text.strip().splitlines()
        fields = dict(item.strip().split("=") for item in header.lstrip("# ").split(","))
        mat = np.array([[float(v) for v in r.split(",")] for r in rows])
        return int(fields["N"]), int(fields["k"]), float(fields["beta"]), mat
    N, k, beta = struct.unpack("<iid", raw[:16])
    n = N * (k + 1)
    mat = np.frombuffer(raw[16:], dtype="<f8").reshape(n, n)
    return N, k, beta, mat.copy()


# }}}
