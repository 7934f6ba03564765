import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Legendre, Polynomial

from fracldg.basis import (
    GridFunction,
    Mesh1D,
    average,
    gauss_radau_project,
    gauss_rule,
    jump,
    l2_error,
    l2_norm,
    l2_project,
    legendre_eval,
    legendre_vandermonde,
    trace,
)


def observed_orders(errors):
    e = np.asarray(errors)
    return np.log2(e[:-1] / e[1:])


# {{{ Legendre and Gauss


@pytest.mark.parametrize("n, x, expected", [(2, 1.0, 1.0), (0, 0.37, 1.0), (4, 0.0, 0.375)])
def test_legendre_values(n, x, expected):
    assert legendre_eval(n, x) == pytest.approx(expected, abs=1e-15)


@given(st.integers(0, 12), st.floats(-0.999, 0.999))
def test_legendre_matches_numpy_and_ode(n, x):
    c = np.zeros(n + 1)
    c[n] = 1.0
    ref = Legendre(c)
    assert legendre_eval(n, x) == pytest.approx(ref(x), abs=1e-12)
    assert legendre_eval(n, x, 1) == pytest.approx(ref.deriv()(x), abs=1e-10)
    # (1 - x^2) P'' - 2x P' + n(n+1) P = 0
    resid = (1 - x * x) * ref.deriv(2)(x) - 2 * x * legendre_eval(n, x, 1) + n * (n + 1) * legendre_eval(n, x)
    assert abs(resid) <= 1e-10 * max(1.0, n * n)


def test_legendre_domain_errors():
    with pytest.raises(ValueError):
        legendre_eval(-1, 0.0)
    with pytest.raises(ValueError):
        legendre_eval(2, 1.0 + 1e-10)
    assert legendre_eval(3, 1.0 + 1e-15) == pytest.approx(1.0)


def test_gauss_rule_examples():
    r1 = gauss_rule(1)
    assert r1.nodes.tolist() == [0.0] and r1.weights.tolist() == [2.0]
    r2 = gauss_rule(2)
    assert np.allclose(sorted(r2.nodes), [-0.5773502691896258, 0.5773502691896258], atol=1e-15)
    assert np.allclose(r2.weights, 1.0)
    r3 = gauss_rule(3)
    assert np.dot(r3.weights, r3.nodes**4) == pytest.approx(0.4, abs=1e-14)
    with pytest.raises(ValueError):
        gauss_rule(0)


@given(st.integers(1, 20))
def test_gauss_exactness(q):
    rule = gauss_rule(q)
    assert rule.weights.sum() == pytest.approx(2.0, abs=1e-12)
    assert np.all(rule.weights > 0)
    for d in range(2 * q):
        exact = 0.0 if d % 2 else 2.0 / (d + 1)
        assert np.dot(rule.weights, rule.nodes**d) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("k", range(6))
def test_discrete_orthogonality(k):
    rule = gauss_rule(k + 1)
    P = legendre_vandermonde(k, rule.nodes)
    G = (P * rule.weights[:, None]).T @ P
    assert np.allclose(G, np.diag(2.0 / (2 * np.arange(k + 1) + 1)), atol=1e-12)


# }}}

# {{{ mesh and grid functions


def test_mesh_tiles_domain():
    m = Mesh1D(-2.0, 3.0, 7)
    assert m.h == pytest.approx(5 / 7)
    lo = [m.element_bounds(s)[0] for s in range(7)]
    hi = [m.element_bounds(s)[1] for s in range(7)]
    assert np.allclose(lo[1:], hi[:-1])
    assert lo[0] == -2.0 and hi[-1] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        Mesh1D(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        Mesh1D(1.0, 1.0, 3)


def test_point_evaluation_matches_expansion():
    m = Mesh1D(0.0, 1.0, 3)
    rng = np.random.default_rng(1)
    gf = GridFunction(m, rng.normal(size=(3, 4)))
    x = 0.5  # element 1, reference coordinate 2*(1.5-1)-1 = 0
    expected = sum(gf.coeffs[1, p] * legendre_eval(p, 0.0) for p in range(4))
    assert gf(x) == pytest.approx(expected)


def test_traces_and_jumps():
    m = Mesh1D(0.0, 2.0, 2)
    gf = GridFunction(m, np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert jump(gf, 2) == -1.0
    assert average(gf, 2) == 0.5
    with pytest.raises(ValueError):
        trace(gf, 1, "minus")
    with pytest.raises(ValueError):
        trace(gf, 3, "plus")
    with pytest.raises(ValueError):
        trace(gf, 0, "plus")
    smooth = l2_project(lambda x: 3 * x - 1, Mesh1D(0, 1, 5), 2)
    assert all(abs(jump(smooth, i)) < 1e-13 for i in range(2, 6))


def test_jump_at_kink_of_example3_datum_shrinks():
    f = lambda x: np.where(np.abs(x) <= 1, (1 - x**2) ** 4 / 10, 0.0)
    jumps = []
    for N in (8, 16, 32, 64):
        gf = l2_project(f, Mesh1D(-2, 2, N), 1, 8)
        jumps.append(abs(jump(gf, 3 * N // 4 + 1)))  # interface at x = 1
    assert np.all(observed_orders(jumps) > 1.8)


# }}}

# {{{ projections and norms


def test_l2_project_examples():
    m1 = Mesh1D(-1.0, 1.0, 1)
    assert np.allclose(l2_project(lambda x: x**2, m1, 2).coeffs, [[1 / 3, 0.0, 2 / 3]], atol=1e-14)
    m = Mesh1D(0.0, 1.0, 4)
    # P_1 on element 2 reproduced exactly
    a, b = m.element_bounds(2)
    f = lambda x: np.where((x >= a) & (x <= b), 2 * (x - a) / m.h - 1, 0.0)
    c = l2_project(f, m, 3).coeffs
    assert np.allclose(c[2], [0, 1, 0, 0], atol=1e-14)


def test_l2_projection_order_example3_datum():
    f = lambda x: np.where(np.abs(x) <= 1, (1 - x**2) ** 4 / 10, 0.0)
    errs = [l2_error(l2_project(f, Mesh1D(-2, 2, N), 1, 6), f, 8) for N in (40, 80, 160)]
    assert np.all(np.abs(observed_orders(errs) - 2) < 0.1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_l2_projection_order(k):
    errs = [l2_error(l2_project(np.sin, Mesh1D(0, 3, N), k), np.sin, k + 4) for N in (8, 16, 32)]
    assert np.all(observed_orders(errs) >= k + 0.9)


def test_norms():
    m = Mesh1D(0.0, 1.0, 64)
    assert l2_norm(GridFunction.zeros(m, 2)) == 0.0
    assert l2_norm(l2_project(lambda x: np.ones_like(x), Mesh1D(0, 1, 3), 1)) == pytest.approx(1.0)
    assert l2_norm(l2_project(lambda x: np.sin(np.pi * x), m, 2)) == pytest.approx(math.sqrt(0.5), abs=1e-6)


def test_radau_example_cubic():
    m = Mesh1D(-1.0, 1.0, 1)
    S = gauss_radau_project(lambda x: x**3, m, 2, "minus")
    # solve the defining 3x3 system in the monomial basis a + b x + c x^2
    A = np.array([[2.0, 0.0, 2 / 3], [0.0, 2 / 3, 0.0], [1.0, 1.0, 1.0]])
    rhs = np.array([0.0, 2 / 5, 1.0])
    a, b, c = np.linalg.solve(A, rhs)
    assert (a, b, c) == pytest.approx((-0.2, 0.6, 0.6), abs=1e-14)
    xs = np.linspace(-1, 1, 7)
    assert np.allclose(S(xs), a + b * xs + c * xs**2, atol=1e-14)


poly_coeffs = st.lists(st.floats(-3, 3), min_size=1, max_size=7)


@settings(max_examples=40, deadline=None)
@given(poly_coeffs, st.integers(1, 4), st.sampled_from(["minus", "plus"]))
def test_radau_conditions_random_polynomials(coefs, k, side):
    f = Polynomial(coefs)
    m = Mesh1D(-0.5, 1.5, 3)
    S = gauss_radau_project(f, m, k, side, q=8)
    rule = gauss_rule(8)
    P = legendre_vandermonde(k, rule.nodes)
    x = m.map_to_physical(rule.nodes)
    diff = S.coeffs @ P.T - f(x)
    moments = (diff * rule.weights) @ P[:, :k]
    assert np.max(np.abs(moments)) <= 1e-12 * max(1.0, np.max(np.abs(f(x))))
    ends = m.vertices[1:] if side == "minus" else m.vertices[:-1]
    vals = S.right_traces() if side == "minus" else S.left_traces()
    assert np.allclose(vals, f(ends), atol=1e-12 * max(1.0, np.max(np.abs(f(ends)))))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.data())
def test_projections_idempotent(k, data):
    m = Mesh1D(0.0, 1.0, 4)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**16)))
    gf = GridFunction(m, rng.normal(size=(4, k + 1)))
    assert np.allclose(l2_project(gf, m, k).coeffs, gf.coeffs, atol=1e-12)
    # vertex values must come from the element that owns them
    S_minus = gauss_radau_project(_elementwise(gf, "minus"), m, k, "minus")
    S_plus = gauss_radau_project(_elementwise(gf, "plus"), m, k, "plus")
    assert np.allclose(S_minus.coeffs, gf.coeffs, atol=1e-12)
    assert np.allclose(S_plus.coeffs, gf.coeffs, atol=1e-12)


def _elementwise(gf, side):
    """Evaluator that resolves vertex values from the element on ``side``."""
    m = gf.mesh

    def f(x):
        x = np.asarray(x, dtype=float)
        t = (x - m.x_left) / m.h
        if side == "minus":
            s = np.clip(np.ceil(t - 1e-12).astype(int) - 1, 0, m.N - 1)
        else:
            s = np.clip(np.floor(t + 1e-12).astype(int), 0, m.N - 1)
        r = np.clip(2 * (t - s) - 1, -1, 1)
        V = legendre_vandermonde(gf.k, r.ravel()).reshape(*r.shape, gf.k + 1)
        return np.einsum("...p,...p->...", V, gf.coeffs[s])

    return f


def test_radau_rejects_k0_and_bad_side():
    m = Mesh1D(0, 1, 2)
    with pytest.raises(ValueError, match="k >= 1"):
        gauss_radau_project(np.sin, m, 0)
    with pytest.raises(ValueError):
        gauss_radau_project(np.sin, m, 1, "left")


def test_radau_order_sin():
    errs = []
    for N in (4, 8, 16):
        m = Mesh1D(0.0, 2.0, N)
        S = gauss_radau_project(np.sin, m, 3, "minus")
        xs = np.linspace(0, 2, 801)
        errs.append(np.max(np.abs(S(xs) - np.sin(xs))))
    assert np.all(observed_orders(errs) > 3.7)


# }}}
