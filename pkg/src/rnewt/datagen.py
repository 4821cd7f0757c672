"""Seeded synthetic datasets for the three simulation scenarios.

All randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; its stream and numpy's ziggurat normal sampler are stable
across platforms, so equal specs give bit-identical datasets.
"""

import csv
import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

from .models import LabeledDataset

# independent streams derived from one seed
STREAM_DATA = 0
STREAM_INIT = 1


class Scenario(str, enum.Enum):
    LINEAR_HUBER = "LinearHuber"
    LOGISTIC_FLIP = "LogisticFlip"
    LINEAR_PARETO = "LinearPareto"


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: Scenario = Scenario.LINEAR_HUBER
    p: int = 10
    n: int = 1000
    epsilon: float = 0.1
    sigma: float = 1.0
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if int(self.n) < 1 or int(self.p) < 1:
            raise ValueError("n and p must be at least 1")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon!r}")
        if not self.sigma > 0 or not self.beta > 0:
            raise ValueError("sigma and beta must be positive")

    def to_dict(self):
        d = asdict(self)
        d["scenario"] = self.scenario.value
        return d


def rng_for(seed, stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream])))


def true_theta(p):
    return np.full(p, 1.0 / math.sqrt(p))


def outlier_count(n, epsilon):
    return int(math.floor(epsilon * n + 1e-9))


def gen_linear_huber(spec):
    """Linear model with Gaussian covariates and wide-covariate, zero-response outliers.

    Clean rows: ``x ~ N(0, I)``, ``y = x @ theta* + w`` with ``Var(w) = 0.1``.
    Outlier rows: ``x ~ N(0, p^2 I)``, ``y = 0``. Rows are shuffled.
    """
    rng = rng_for(spec.seed, STREAM_DATA)
    n, p = spec.n, spec.p
    theta = true_theta(p)
    n_out = outlier_count(n, spec.epsilon)
    n_clean = n - n_out
    X_clean = rng.standard_normal((n_clean, p))
    y_clean = X_clean @ theta + math.sqrt(0.1) * rng.standard_normal(n_clean)
    X_out = p * rng.standard_normal((n_out, p))
    X = np.vstack([X_clean, X_out])
    y = np.concatenate([y_clean, np.zeros(n_out)])
    mask = np.concatenate([np.zeros(n_clean, bool), np.ones(n_out, bool)])
    perm = rng.permutation(n)
    return LabeledDataset(X[perm], y[perm], mask[perm], theta)


def gen_logistic_flip(spec):
    """Logistic model where a random ``floor(eps * n)`` subset of labels is redrawn by a fair coin."""
    rng = rng_for(spec.seed, STREAM_DATA)
    n, p = spec.n, spec.p
    theta = true_theta(p)
    X = rng.standard_normal((n, p))
    y = (rng.uniform(size=n) < expit(X @ theta)).astype(np.float64)
    n_out = outlier_count(n, spec.epsilon)
    idx = rng.choice(n, size=n_out, replace=False)
    y[idx] = rng.integers(0, 2, size=n_out).astype(np.float64)
    mask = np.zeros(n, bool)
    mask[idx] = True
    return LabeledDataset(X, y, mask, theta)


def pareto_noise(rng, size, sigma, beta):
    """Pareto(shape ``beta``, scale ``sigma``) draws, centred when the mean exists."""
    u = 1.0 - rng.uniform(size=size)  # in (0, 1]
    center = beta / (beta - 1.0) if beta > 1 else 0.0
    return sigma * (u ** (-1.0 / beta) - center)


def gen_linear_pareto(spec):
    """Linear model with Gaussian covariates and Pareto response noise; no outlier rows."""
    rng = rng_for(spec.seed, STREAM_DATA)
    n, p = spec.n, spec.p
    theta = true_theta(p)
    X = rng.standard_normal((n, p))
    y = X @ theta + pareto_noise(rng, n, spec.sigma, spec.beta)
    return LabeledDataset(X, y, np.zeros(n, bool), theta)


GENERATORS = {
    Scenario.LINEAR_HUBER: gen_linear_huber,
    Scenario.LOGISTIC_FLIP: gen_logistic_flip,
    Scenario.LINEAR_PARETO: gen_linear_pareto,
}


def generate(spec):
    return GENERATORS[spec.scenario](spec)


def write_csv(dataset, path):
    """Write columns ``x_1..x_p, y, is_outlier``."""
    mask = dataset.outlier_mask
    if mask is None:
        mask = np.zeros(dataset.n, bool)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{j + 1}" for j in range(dataset.p)] + ["y", "is_outlier"])
        for row, yi, oi in zip(dataset.X, dataset.y, mask):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yi)), int(oi)])


def read_csv(path, truth=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    p = sum(1 for h in header if h.startswith("x_"))
    data = np.array([[float(v) for v in r[: p + 1]] for r in body]).reshape(-1, p + 1)
    mask = np.array([int(r[p + 1]) for r in body], dtype=bool)
    return LabeledDataset(data[:, :p], data[:, p], mask, truth)
