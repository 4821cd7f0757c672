import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rnewt.datagen import (
    Scenario,
    ScenarioSpec,
    generate,
    outlier_count,
    pareto_noise,
    read_csv,
    rng_for,
    true_theta,
    write_csv,
)


def test_spec_validation():
    for kw in (dict(n=0), dict(p=0), dict(epsilon=0.5), dict(epsilon=1.0), dict(sigma=0.0),
               dict(beta=-1.0)):
        with pytest.raises(ValueError):
            ScenarioSpec(**kw)
    with pytest.raises(ValueError):
        ScenarioSpec(scenario="Nope")


def test_linear_huber_clean_noise_variance():
    data = generate(ScenarioSpec(Scenario.LINEAR_HUBER, 10, 1000, 0.0, seed=2))
    assert not data.outlier_mask.any()
    var = np.var(data.y - data.X @ data.truth)
    assert 0.08 <= var <= 0.12


def test_linear_huber_outlier_rows():
    data = generate(ScenarioSpec(Scenario.LINEAR_HUBER, 10, 1000, 0.1, seed=0))
    assert data.outlier_mask.sum() == 100
    assert np.all(data.y[data.outlier_mask] == 0.0)
    # outlier covariates have per-coordinate variance p^2
    assert 70 < np.var(data.X[data.outlier_mask]) < 130
    np.testing.assert_allclose(data.truth, np.full(10, 1 / math.sqrt(10)))


@given(st.integers(1, 3000), st.floats(0, 0.49))
def test_outlier_count_formula(n, eps):
    k = outlier_count(n, eps)
    assert k == math.floor(eps * n + 1e-9)
    assert n - k == math.ceil((1 - eps) * n - 1e-9)


@pytest.mark.parametrize("scenario", list(Scenario))
def test_generation_is_deterministic(scenario):
    spec = ScenarioSpec(scenario, 4, 50, 0.2, seed=123)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.outlier_mask, b.outlier_mask)
    c = generate(ScenarioSpec(scenario, 4, 50, 0.2, seed=124))
    assert not np.array_equal(a.X, c.X)


def test_streams_are_independent():
    a = rng_for(5, 0).standard_normal(4)
    b = rng_for(5, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, rng_for(5, 0).standard_normal(4))


def test_logistic_labels():
    data = generate(ScenarioSpec(Scenario.LOGISTIC_FLIP, 10, 10_000, 0.0, seed=1))
    assert set(np.unique(data.y)) <= {0.0, 1.0}
    high = data.X @ data.truth > 2
    assert data.y[high].mean() > 0.8


def test_logistic_flip_mask_count():
    data = generate(ScenarioSpec(Scenario.LOGISTIC_FLIP, 5, 1000, 0.1, seed=3))
    assert data.outlier_mask.sum() == 100
    data.check_logistic()


def test_pareto_large_beta_nearly_deterministic():
    w = pareto_noise(rng_for(0, 0), 10_000, 2.0, 1e6)
    assert np.var(w) < 1e-6 * 4.0
    np.testing.assert_allclose(w.mean(), 2.0 * (1 - 1e6 / (1e6 - 1)), atol=1e-4)


def test_pareto_heavy_tail_quantiles():
    w = pareto_noise(rng_for(0, 0), 100_000, 0.5, 1.0)
    assert np.quantile(np.abs(w), 0.999) > 100 * np.median(np.abs(w))
    assert np.all(w >= 0.5)  # beta = 1 is left uncentred


def test_linear_pareto_no_outliers():
    data = generate(ScenarioSpec(Scenario.LINEAR_PARETO, 3, 100, sigma=1.0, beta=2.0, seed=0))
    assert not data.outlier_mask.any()
    assert data.truth.shape == (3,)


def test_csv_round_trip(tmp_path):
    data = generate(ScenarioSpec(Scenario.LINEAR_HUBER, 3, 40, 0.1, seed=8))
    path = tmp_path / "d.csv"
    write_csv(data, path)
    header = path.read_text().splitlines()[0]
    assert header == "x_1,x_2,x_3,y,is_outlier"
    back = read_csv(path, truth=true_theta(3))
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.y, data.y)
    np.testing.assert_array_equal(back.outlier_mask, data.outlier_mask)
