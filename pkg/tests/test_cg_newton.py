import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rnewt.cg_newton import (
    CgConfig,
    cg_newton_step,
    cg_robust_newton,
    conjugate_gradient,
    fd_delta_sweep,
    hv_product,
)
from rnewt.datagen import Scenario, ScenarioSpec, generate
from rnewt.models import GlmModel, LabeledDataset, empirical_hessian
from rnewt.newton import NewtonConfig, newton_direction, ols_fit
from rnewt.robust_derivatives import Kind, RobustConfig, robust_gradient, robust_hessian

LIN, LOG = GlmModel.linear(), GlmModel.logistic()
NONE = RobustConfig.none()


def _linear(seed, n=200, p=6):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    theta = rng.standard_normal(p)
    return LabeledDataset(X, X @ theta + 0.2 * rng.standard_normal(n), truth=theta)


def _logistic(seed, n=400, p=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-X.sum(axis=1) / 2))).astype(float)
    return LabeledDataset(X, y)


def _spd(seed, p):
    A = np.random.default_rng(seed).standard_normal((p, p))
    return A @ A.T + p * np.eye(p)


def test_config_validation():
    with pytest.raises(ValueError):
        CgConfig(fd_delta=0.0)
    with pytest.raises(ValueError):
        CgConfig(inner_iters=0)


def test_hv_zero_vector():
    data = _linear(0)
    np.testing.assert_array_equal(hv_product(data, LIN, np.ones(6), np.zeros(6), NONE, 1e-9), 0)


@pytest.mark.parametrize("fd", [1e-3, 1.0, 10.0])
def test_hv_exact_for_quadratic(fd):
    data = _linear(1)
    v = np.random.default_rng(2).standard_normal(6)
    ref = data.X.T @ data.X @ v / data.n
    np.testing.assert_allclose(hv_product(data, LIN, np.ones(6), v, NONE, fd), ref,
                               rtol=1e-6, atol=1e-8)


def test_hv_logistic_matches_hessian():
    data = _logistic(3)
    theta = np.array([0.2, -0.1, 0.4])
    v = np.array([1.0, 0.5, -2.0])
    ref = empirical_hessian(LOG, theta, data) @ v
    np.testing.assert_allclose(hv_product(data, LOG, theta, v, NONE, 1e-6), ref, atol=1e-4)


def test_fd_delta_sensitivity():
    data = _logistic(4)
    theta, v = np.array([0.3, 0.3, -0.2]), np.array([0.5, -1.0, 1.0])
    out = fd_delta_sweep(data, LOG, theta, v, NONE, [1e-5, 1e-6])
    assert np.linalg.norm(out[1e-5] - out[1e-6]) < 1e-4


def test_cg_step_zero_gradient():
    data = LabeledDataset(np.eye(3), np.zeros(3))
    step = cg_newton_step(data, LIN, np.zeros(3), NONE, CgConfig())
    np.testing.assert_array_equal(step.direction, 0)
    assert step.n_inner == 0


@pytest.mark.parametrize("seed", range(4))
def test_cg_synthetic_spd_matches_direct_solve(seed):
    A = _spd(seed, 6)
    b = np.random.default_rng(seed + 100).standard_normal(6)
    step = conjugate_gradient(lambda v: A @ v, b, 6)
    np.testing.assert_allclose(step.direction, np.linalg.solve(A, b), atol=1e-8)


@given(st.integers(2, 8), st.integers(0, 10**6))
def test_cg_residuals_nonincreasing_on_spd(p, seed):
    # CG minimises the A-norm error; for well-conditioned A the residual norm is monotone
    A = np.eye(p) + np.diag(np.random.default_rng(seed).uniform(0, 0.5, p))
    b = np.random.default_rng(seed + 1).standard_normal(p)
    norms = conjugate_gradient(lambda v: A @ v, b, p).residual_norms
    assert all(b2 <= a2 + 1e-10 for a2, b2 in zip(norms, norms[1:]))


def test_cg_breakdown_on_indefinite():
    A = np.diag([1.0, -1.0])
    step = conjugate_gradient(lambda v: A @ v, np.array([1.0, 1.0]), 2)
    assert step.breakdown


def test_cg_residual_tolerance_early_exit():
    A = _spd(1, 5)
    step = conjugate_gradient(lambda v: A @ v, np.ones(5), 50, residual_tol=1e6)
    assert step.n_inner == 0


@pytest.mark.parametrize("p", [5, 10])
def test_cg_step_matches_newton_direction(p):
    data = _linear(p, n=300, p=p)
    theta = np.zeros(p)
    g = robust_gradient(data, LIN, theta, NONE)
    step = cg_newton_step(data, LIN, theta, NONE, CgConfig(fd_delta=1e-6), g_theta=g)
    dx, _ = newton_direction(g, robust_hessian(data, LIN, theta, NONE))
    assert step.n_inner <= p
    assert np.linalg.norm(step.direction - dx) <= 1e-6 * np.linalg.norm(dx)
    H = data.X.T @ data.X / data.n
    assert np.linalg.norm(H @ step.direction + g) <= 1e-6 * np.linalg.norm(g)


def test_cg_random_init_still_solves():
    data = _linear(7)
    g = robust_gradient(data, LIN, np.zeros(6), NONE)
    step = cg_newton_step(data, LIN, np.zeros(6), NONE,
                          CgConfig(fd_delta=1e-6, random_init=True, seed=3))
    dx, _ = newton_direction(g, robust_hessian(data, LIN, np.zeros(6), NONE))
    np.testing.assert_allclose(step.direction, dx, rtol=1e-5, atol=1e-8)


def test_cg_newton_one_outer_step_reaches_ols():
    data = _linear(8)
    ccfg = CgConfig(fd_delta=1e-6, newton=NewtonConfig(max_iters=2))
    trace = cg_robust_newton(data, LIN, 5 * np.ones(6), NONE, ccfg)
    np.testing.assert_allclose(trace[1].theta, ols_fit(data), atol=1e-6)


def test_cg_newton_beats_ols_small_contamination():
    data = generate(ScenarioSpec(Scenario.LINEAR_HUBER, 10, 1000, 0.01, seed=0))
    theta0 = 1.0 + 2 * np.random.default_rng(1).standard_normal(10)
    ccfg = CgConfig(1e-9, newton=NewtonConfig(zeta=1e-3))
    trace = cg_robust_newton(data, LIN, theta0, RobustConfig(), ccfg)
    assert trace[-1].param_error < np.linalg.norm(ols_fit(data) - data.truth)


def test_cg_newton_heavy_tail_smoke():
    data = generate(ScenarioSpec(Scenario.LINEAR_PARETO, 10, 1000, sigma=0.25, beta=0.7, seed=0))
    theta0 = 1.5 + 2 * np.random.default_rng(1).standard_normal(10)
    ccfg = CgConfig(1e-10, newton=NewtonConfig(zeta=1e-5))
    trace = cg_robust_newton(data, LIN, theta0, RobustConfig(Kind.HEAVY_TAIL), ccfg)
    assert len(trace) == 31
    assert np.all(np.isfinite(trace.param_errors))


def test_cg_newton_records_breakdown_flag():
    # a loss with negative curvature makes the first inner step break down
    from rnewt.models import Link

    concave = GlmModel(Link.CUSTOM, phi=lambda u: -(u**2) / 2, dphi=lambda u: -u,
                       d2phi=lambda u: -np.ones_like(u))
    data = _linear(9, p=2)
    trace = cg_robust_newton(data, concave, np.ones(2), RobustConfig(hessian_eig_floor=0.0, kind="none"),
                             CgConfig(newton=NewtonConfig(max_iters=1)))
    assert trace.flagged("CurvatureBreakdown") == [0, 1]
