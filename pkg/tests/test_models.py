import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import fd_gradient, fd_jacobian
from rnewt.exceptions import DimensionMismatch
from rnewt.models import (
    GlmModel,
    LabeledDataset,
    Link,
    curvature_diagnostics,
    empirical_gradient,
    empirical_hessian,
    empirical_risk,
    gradient,
    hessian,
    loss,
    risk_terms,
    sample_gradients,
    sample_hessians,
    sample_losses,
)

LIN, LOG = GlmModel.linear(), GlmModel.logistic()


def test_loss_examples():
    assert loss(LOG, np.zeros(3), np.array([1.0, -2.0, 0.5]), 1.0) == pytest.approx(math.log(2))
    assert loss(LIN, np.array([2.0, 5.0]), np.array([1.0, 0.0]), 2.0) == pytest.approx(-2.0)
    assert loss(LOG, np.array([3.0]), np.array([1.0]), 0.0) == pytest.approx(3.048587, abs=1e-6)


def test_identity_loss_offset_from_squared_error():
    theta, x, y = np.array([0.3, -1.2]), np.array([2.0, 1.0]), 1.7
    sq = 0.5 * (y - x @ theta) ** 2
    assert loss(LIN, theta, x, y) == pytest.approx(sq - 0.5 * y * y)


def test_gradient_examples():
    np.testing.assert_allclose(gradient(LOG, np.zeros(2), np.array([2.0, -1.0]), 1.0), [-1.0, 0.5])
    np.testing.assert_allclose(gradient(LIN, np.ones(2), np.ones(2), 0.0), [2.0, 2.0])


def test_hessian_examples():
    np.testing.assert_allclose(hessian(LIN, np.array([7.0, -3.0]), np.array([1.0, 2.0]), 0.3),
                               [[1, 2], [2, 4]])
    np.testing.assert_allclose(hessian(LOG, np.zeros(2), np.array([1.0, 0.0]), 1.0),
                               [[0.25, 0], [0, 0]])


def test_logistic_phi_stable_for_large_u():
    assert LOG.Phi(800.0) == pytest.approx(800.0)
    assert LOG.Phi(-800.0) == pytest.approx(0.0, abs=1e-300)
    assert np.isfinite(LOG.d2Phi(np.array([-1e4, 1e4]))).all()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        loss(LIN, np.zeros(3), np.zeros(2), 0.0)
    with pytest.raises(DimensionMismatch):
        LabeledDataset(np.zeros((3, 2)), np.zeros(4))


_triples = st.tuples(
    st.sampled_from([LIN, LOG]),
    st.integers(1, 5),
    st.integers(0, 10**6),
)


def _random_sample(model, p, seed):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(p)
    x = rng.standard_normal(p)
    y = float(rng.integers(0, 2)) if model.link is Link.LOGISTIC else float(rng.standard_normal())
    return theta, x, y


@given(_triples)
def test_gradient_matches_finite_difference(args):
    model, p, seed = args
    theta, x, y = _random_sample(model, p, seed)
    ref = fd_gradient(lambda t: loss(model, t, x, y), theta)
    np.testing.assert_allclose(gradient(model, theta, x, y), ref, rtol=1e-6, atol=1e-8)


@given(_triples)
def test_hessian_matches_finite_difference(args):
    model, p, seed = args
    theta, x, y = _random_sample(model, p, seed)
    ref = fd_jacobian(lambda t: gradient(model, t, x, y), theta)
    np.testing.assert_allclose(hessian(model, theta, x, y), ref, atol=1e-5)


@given(_triples)
def test_hessian_psd_and_symmetric(args):
    model, p, seed = args
    theta, x, y = _random_sample(model, p, seed)
    H = hessian(model, theta, x, y)
    np.testing.assert_array_equal(H, H.T)
    assert np.linalg.eigvalsh(H)[0] >= -1e-10


@given(st.integers(1, 5), st.integers(0, 10**6))
def test_logistic_loss_convex_along_segments(p, seed):
    rng = np.random.default_rng(seed)
    t1, t2, x = rng.standard_normal((3, p)) * 3
    y = float(rng.integers(0, 2))
    mid = loss(LOG, (t1 + t2) / 2, x, y)
    assert mid <= (loss(LOG, t1, x, y) + loss(LOG, t2, x, y)) / 2 + 1e-12


@given(st.floats(-30, 30))
def test_logistic_d2phi_range(u):
    assert 0 < LOG.d2Phi(u) <= 0.25


def test_vectorised_maps_agree_with_per_sample():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    y = rng.integers(0, 2, 20).astype(float)
    data = LabeledDataset(X, y)
    theta = rng.standard_normal(3)
    for model in (LIN, LOG):
        per_l = [loss(model, theta, x, yi) for x, yi in zip(X, y)]
        per_g = [gradient(model, theta, x, yi) for x, yi in zip(X, y)]
        per_h = [hessian(model, theta, x, yi).ravel() for x, yi in zip(X, y)]
        np.testing.assert_allclose(sample_losses(model, theta, data), per_l)
        np.testing.assert_allclose(sample_gradients(model, theta, data), per_g)
        np.testing.assert_allclose(sample_hessians(model, theta, data), per_h)
        assert empirical_risk(model, theta, data) == pytest.approx(np.mean(per_l))
        np.testing.assert_allclose(empirical_gradient(model, theta, data), np.mean(per_g, axis=0))
        np.testing.assert_allclose(empirical_hessian(model, theta, data).ravel(),
                                   np.mean(per_h, axis=0))
    np.testing.assert_allclose(risk_terms(LIN, theta, data), 0.5 * (y - X @ theta) ** 2)


def test_dataset_is_immutable_and_clean_subset():
    X = np.arange(6.0).reshape(3, 2)
    data = LabeledDataset(X, [0, 1, 2], outlier_mask=[False, True, False])
    with pytest.raises(ValueError):
        data.X[0, 0] = 9.0
    X[0, 0] = 9.0
    assert data.X[0, 0] == 0.0
    assert data.clean().n == 2
    with pytest.raises(ValueError):
        data.check_logistic()


def test_custom_link():
    cubic = GlmModel(Link.CUSTOM, phi=lambda u: u**4 / 4, dphi=lambda u: u**3,
                     d2phi=lambda u: 3 * u**2)
    theta, x = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    ref = fd_gradient(lambda t: loss(cubic, t, x, 0.2), theta)
    np.testing.assert_allclose(gradient(cubic, theta, x, 0.2), ref, rtol=1e-6)
    with pytest.raises(ValueError):
        GlmModel(Link.CUSTOM)


def test_curvature_identity_examples():
    data = LabeledDataset(np.eye(2), [0.3, -1.0])
    d = curvature_diagnostics(LIN, data, 6, 1.0, np.zeros(2), seed=1)
    assert d.L_hat == pytest.approx(0.0, abs=1e-9)
    assert d.m_hat == pytest.approx(0.5) and d.M_hat == pytest.approx(0.5)


def test_curvature_logistic_at_zero_radius():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((50, 3))
    data = LabeledDataset(X, rng.integers(0, 2, 50))
    d = curvature_diagnostics(LOG, data, 3, 0.0, np.zeros(3))
    w = np.linalg.eigvalsh(0.25 * X.T @ X / 50)
    assert d.m_hat == pytest.approx(w[0]) and d.M_hat == pytest.approx(w[-1])
    assert d.degenerate and d.L_hat == 0.0


def test_curvature_logistic_lipschitz_positive():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((100, 2))
    data = LabeledDataset(X, rng.integers(0, 2, 100))
    d = curvature_diagnostics(LOG, data, 8, 1.0, np.zeros(2))
    assert d.L_hat > 0 and not d.degenerate
    with pytest.raises(ValueError):
        curvature_diagnostics(LOG, data, 1, 1.0, np.zeros(2))
