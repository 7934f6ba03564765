import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracldg.basis import Mesh1D
from fracldg.fractional import caputo_l1_apply, distributed_rule, l1_lambda, single_order_rule
from fracldg.ldg import PDEProblem
from fracldg.march import (
    HistoryBuffer,
    NonconvergenceError,
    Solver,
    SolverConfig,
    history_rhs,
    history_rhs_reference,
    run,
    stability_run,
    step,
)

ones = lambda v: np.ones_like(np.asarray(v, dtype=float))
bump = lambda x: np.where(np.abs(x) <= 1, (1 - np.asarray(x) ** 2) ** 4 / 10, 0.0)


def heat(mesh, **kw):
    return PDEProblem(mesh, S=ones, phi=lambda v: np.asarray(v, dtype=float), sqrt_S=ones, **kw)


def burgers_problem(N=20, beta=1.5, b=1.0):
    return PDEProblem(Mesh1D(-2.0, 2.0, N), F=lambda v: 0.5 * v**2, dF=lambda v: v,
                      b=b, beta=beta, V0=bump)


# {{{ history sums


def _buffer(states):
    h = HistoryBuffer()
    for s in states:
        h.append(s)
    return h


def test_history_first_step_and_constant_history():
    rule = distributed_rule(7, dt=0.01)
    V0 = np.array([1.0, -2.0, 0.5])
    assert np.allclose(history_rhs(_buffer([V0]), rule, 1), rule.omega * V0, rtol=1e-14)
    hist = _buffer([V0] * 9)
    assert np.allclose(history_rhs(hist, rule, 9), rule.omega * V0, rtol=1e-13)
    with pytest.raises(ValueError):
        history_rhs(HistoryBuffer(), rule, 1)
    with pytest.raises(ValueError):
        history_rhs_reference(_buffer([V0]), rule, 2)


@settings(deadline=None, max_examples=25)
@given(st.integers(1, 30), st.integers(1, 12), st.integers(0, 2**16))
def test_fast_history_matches_reference(n, M_q, seed):
    rng = np.random.default_rng(seed)
    rule = distributed_rule(M_q, dt=0.02)
    hist = _buffer(rng.normal(size=(n, 6)))
    fast, ref = history_rhs(hist, rule, n), history_rhs_reference(hist, rule, n)
    assert np.allclose(fast, ref, rtol=1e-13, atol=1e-13 * np.abs(ref).max())


def test_history_states_are_immutable():
    h = _buffer([np.zeros(3)])
    with pytest.raises(ValueError):
        h.states[0][0] = 1.0
    src = np.ones(3)
    h.append(src)
    src[0] = 5.0
    assert h.states[1][0] == 1.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig.create(1.0, 10, picard_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig.create(1.0, 10, picard_max_iters=0)
    cfg = SolverConfig.create(1.0, 10)
    with pytest.raises(ValueError):
        SolverConfig(cfg.grid, distributed_rule(5, dt=0.2))
    assert SolverConfig.create(0.5, 100).grid.dt == 0.005
    assert SolverConfig.create(1.0, 4, alpha=0.3).rule.single


# }}}

# {{{ stepping


def test_zero_problem_stays_zero():
    pr = PDEProblem(Mesh1D(-1.0, 1.0, 5), F=lambda v: 0.5 * v**2, dF=lambda v: v, S=ones, b=1.0)
    traj = run(pr, SolverConfig.create(1.0, 10), 2)
    assert np.all(traj.final.coeffs == 0.0) and np.all(traj.norms == 0.0)


def test_scalar_source_matches_l1_recurrence():
    # no spatial terms and g = 1: every cell mean follows the scalar L1 scheme
    alpha, M = 0.6, 12
    cfg = SolverConfig.create(1.0, M, alpha=alpha)
    pr = PDEProblem(Mesh1D(0.0, 1.0, 3), g=lambda x, t: np.ones_like(x))
    traj = run(pr, cfg, 1)
    y = [0.0]
    dt = 1.0 / M
    for n in range(1, M + 1):
        # the L1 operator is affine in y_n with slope 1/lambda
        base = caputo_l1_apply(y + [0.0], alpha, dt)
        y.append((1.0 - base) * l1_lambda(alpha, dt))
    assert np.allclose(traj.final.coeffs[:, 0], y[-1], rtol=1e-12)
    assert np.allclose(traj.final.coeffs[:, 1:], 0.0, atol=1e-13)
    assert y[-1] == pytest.approx(1 / math.gamma(1 + alpha), rel=0.05)


@pytest.mark.parametrize("k", [1, 2])
def test_linear_heat_converges_at_k_plus_1_in_one_iteration(k):
    # V = t sin(pi x): the L1 scheme is exact for linear time dependence
    alpha = 0.5
    exact = lambda x, t: t * np.sin(np.pi * x)
    g = lambda x, t: (t ** (1 - alpha) / math.gamma(2 - alpha) + np.pi**2 * t) * np.sin(np.pi * x)
    errs = []
    for N in (4, 8, 16):
        traj = run(heat(Mesh1D(0.0, 1.0, N), g=g), SolverConfig.create(1.0, 4, alpha=alpha), k)
        assert traj.max_iterations == 1
        assert max(r.residual for r in traj.reports) <= 1e-10
        errs.append(traj.error(exact))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert orders[-1] >= k + 0.8


def test_penalty_sigma_insensitivity():
    alpha = 0.5
    exact = lambda x, t: t * np.sin(np.pi * x)
    g = lambda x, t: (t ** (1 - alpha) / math.gamma(2 - alpha) + np.pi**2 * t) * np.sin(np.pi * x)
    errs = [run(heat(Mesh1D(0.0, 1.0, 8), g=g), SolverConfig.create(1.0, 4, alpha=alpha, sigma=s), 2).error(exact)
            for s in (0.5, 1.0, 2.0, 4.0)]
    assert max(errs) / min(errs) < 2.0


def test_nonlinear_step_reports_and_module_step():
    pr = burgers_problem(N=8)
    cfg = SolverConfig.create(0.1, 5, M_q=10)
    solver = Solver(pr, cfg, k=2)
    traj = solver.run()
    assert all(r.residual <= cfg.picard_tol for r in traj.reports)
    assert traj.max_iterations > 1
    # the functional step reproduces the last state from the same history
    hist = _buffer(solver.history.states[:5])
    V5, rep = step(hist, 5, pr, cfg, solver.disc)
    assert np.allclose(V5, solver.history.states[5], atol=1e-12)
    assert rep.step == 5 and rep.t == pytest.approx(0.1)
    with pytest.raises(ValueError):
        step(hist, 0, pr, cfg, solver.disc)


def test_nonconvergence_error():
    cfg = SolverConfig.create(0.1, 5, M_q=10, picard_max_iters=1, picard_tol=1e-15)
    with pytest.raises(NonconvergenceError) as info:
        run(burgers_problem(N=8), cfg, 1)
    assert info.value.step == 1 and info.value.iterations == 1 and info.value.residual > 0


def test_determinism_and_diagnostics(tmp_path):
    path = tmp_path / "diag.txt"
    cfg = SolverConfig.create(0.1, 6, M_q=8, diagnostics_path=path)
    a = run(burgers_problem(N=8), cfg, 1)
    b = run(burgers_problem(N=8), SolverConfig.create(0.1, 6, M_q=8), 1)
    assert np.array_equal(a.final.coeffs, b.final.coeffs)
    lines = path.read_text().splitlines()
    assert len(lines) == 6 and lines[0].startswith("step=1 t=") and "picard_iters=" in lines[0]


def test_fast_and_reference_history_agree_in_a_run():
    pr = burgers_problem(N=8)
    a = run(pr, SolverConfig.create(0.2, 10, M_q=6), 1)
    b = run(pr, SolverConfig.create(0.2, 10, M_q=6, fast_history=False), 1)
    assert np.allclose(a.final.coeffs, b.final.coeffs, rtol=1e-12, atol=1e-14)


# }}}

# {{{ stability


@pytest.mark.parametrize("beta", [1.2, 1.8])
def test_burgers_stability(beta):
    res = stability_run(burgers_problem(N=16, beta=beta), SolverConfig.create(0.5, 100), 1)
    assert res.monotone and res.norms[-1] < res.norms[0]


def test_stability_single_order():
    res = stability_run(burgers_problem(N=16), SolverConfig.create(0.5, 60, alpha=0.5), 2)
    assert res.monotone


def test_stability_zero_data_and_source_rejected():
    res = stability_run(PDEProblem(Mesh1D(0.0, 1.0, 4), b=1.0), SolverConfig.create(1.0, 5), 1)
    assert res.monotone and np.all(res.norms == 0.0)
    with pytest.raises(ValueError):
        stability_run(PDEProblem(Mesh1D(0.0, 1.0, 4), g=lambda x, t: x), SolverConfig.create(1.0, 5), 1)


def test_pure_heat_strictly_decreasing():
    pr = heat(Mesh1D(0.0, 1.0, 10), V0=lambda x: np.sin(np.pi * x))
    res = stability_run(pr, SolverConfig.create(0.5, 50), 2)
    assert np.all(np.diff(res.norms) < 0)


# }}}
