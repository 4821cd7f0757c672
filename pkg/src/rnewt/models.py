"""GLM loss family for linear and logistic regression.

The per-sample loss is the negative log-likelihood ``-y * u + phi(u)`` with
``u = x @ theta``. For the identity link ``phi(u) = u**2 / 2`` so the loss
differs from the squared error ``(y - u)**2 / 2`` by the constant ``-y**2/2``.

Each of :func:`loss`, :func:`gradient` and :func:`hessian` acts on a single
sample; the ``sample_*`` variants map over a whole dataset at once and return
one row per sample.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from ._validation import as_vector
from .exceptions import DimensionMismatch


class Link(str, enum.Enum):
    IDENTITY = "identity"
    LOGISTIC = "logistic"
    CUSTOM = "custom"


def _identity_phi(u):
    return 0.5 * u * u


def _identity_dphi(u):
    return u


def _identity_d2phi(u):
    return np.ones_like(u)


def _logistic_phi(u):
    # log(1 + e^u) without overflow for large u
    u = np.asarray(u, dtype=np.float64)
    return np.where(u > 0, u + np.log1p(np.exp(-np.abs(u))), np.log1p(np.exp(-np.abs(u))))


def _logistic_d2phi(u):
    s = expit(u)
    return s * (1.0 - s)


@dataclass(frozen=True)
class GlmModel:
    """Loss-family descriptor.

    ``phi``, ``dphi`` and ``d2phi`` are only consulted for ``Link.CUSTOM``;
    they must be vectorised callables.
    """

    link: Link = Link.IDENTITY
    scale: float = 1.0
    phi: Optional[Callable] = field(default=None, compare=False, repr=False)
    dphi: Optional[Callable] = field(default=None, compare=False, repr=False)
    d2phi: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "link", Link(self.link))
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.link is Link.CUSTOM and None in (self.phi, self.dphi, self.d2phi):
            raise ValueError("custom link requires phi, dphi and d2phi")

    @classmethod
    def linear(cls):
        return cls(Link.IDENTITY)

    @classmethod
    def logistic(cls):
        return cls(Link.LOGISTIC)

    def Phi(self, u):
        if self.link is Link.IDENTITY:
            return _identity_phi(u)
        if self.link is Link.LOGISTIC:
            return _logistic_phi(u)
        return self.phi(u)

    def dPhi(self, u):
        if self.link is Link.IDENTITY:
            return _identity_dphi(u)
        if self.link is Link.LOGISTIC:
            return expit(u)
        return self.dphi(u)

    def d2Phi(self, u):
        if self.link is Link.IDENTITY:
            return _identity_d2phi(np.asarray(u, dtype=np.float64))
        if self.link is Link.LOGISTIC:
            return _logistic_d2phi(u)
        return self.d2phi(u)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Covariates ``X`` (n, p), responses ``y`` (n,), and simulation provenance."""

    X: np.ndarray
    y: np.ndarray
    outlier_mask: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has shape {X.shape} but y has length {y.shape[0]}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.outlier_mask is not None:
            mask = np.array(self.outlier_mask, dtype=bool).reshape(-1)
            if mask.shape[0] != y.shape[0]:
                raise DimensionMismatch("outlier_mask length differs from y")
            mask.setflags(write=False)
            object.__setattr__(self, "outlier_mask", mask)
        if self.truth is not None:
            truth = as_vector(self.truth, X.shape[1], "truth").copy()
            truth.setflags(write=False)
            object.__setattr__(self, "truth", truth)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def clean(self):
        """Subset without the flagged outliers (all rows when no mask)."""
        if self.outlier_mask is None:
            return self
        keep = ~self.outlier_mask
        return LabeledDataset(self.X[keep], self.y[keep], None, self.truth)

    def check_logistic(self):
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("logistic responses must lie in {0, 1}")


def _sample_args(theta, x, y):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    theta = as_vector(theta)
    if theta.shape != x.shape:
        raise DimensionMismatch(f"theta has length {theta.shape[0]}, x has length {x.shape[0]}")
    return theta, x, float(y)


def loss(model, theta, x, y):
    """Per-sample negative log-likelihood ``-y * x@theta + phi(x@theta)``."""
    theta, x, y = _sample_args(theta, x, y)
    u = float(x @ theta)
    return float(-y * u + model.Phi(u))


def gradient(model, theta, x, y):
    theta, x, y = _sample_args(theta, x, y)
    u = float(x @ theta)
    return (float(model.dPhi(u)) - y) * x


def hessian(model, theta, x, y):
    theta, x, y = _sample_args(theta, x, y)
    u = float(x @ theta)
    return float(model.d2Phi(u)) * np.outer(x, x)


def _dataset_u(dataset, theta):
    theta = as_vector(theta, dataset.p)
    return dataset.X @ theta


def sample_losses(model, theta, dataset):
    """Losses of every sample, shape (n,)."""
    u = _dataset_u(dataset, theta)
    return -dataset.y * u + model.Phi(u)


def risk_terms(model, theta, dataset):
    """Per-sample losses used for risk estimation.

    Squared error for the identity link, GLM negative log-likelihood otherwise.
    """
    if model.link is Link.IDENTITY:
        return 0.5 * (dataset.y - _dataset_u(dataset, theta)) ** 2
    return sample_losses(model, theta, dataset)


def sample_gradients(model, theta, dataset):
    """Per-sample gradients, shape (n, p)."""
    u = _dataset_u(dataset, theta)
    return (model.dPhi(u) - dataset.y)[:, None] * dataset.X


def sample_hessians(model, theta, dataset):
    """Row-major flattened per-sample Hessians, shape (n, p*p)."""
    u = _dataset_u(dataset, theta)
    X = dataset.X
    w = model.d2Phi(u)
    outer = X[:, :, None] * X[:, None, :]
    return (w[:, None, None] * outer).reshape(X.shape[0], -1)


def empirical_risk(model, theta, dataset):
    return float(sample_losses(model, theta, dataset).mean())


def empirical_gradient(model, theta, dataset):
    u = _dataset_u(dataset, theta)
    return dataset.X.T @ (model.dPhi(u) - dataset.y) / dataset.n


def empirical_hessian(model, theta, dataset):
    u = _dataset_u(dataset, theta)
    X = dataset.X
    return (X * model.d2Phi(u)[:, None]).T @ X / dataset.n


@dataclass(frozen=True)
class CurvatureDiagnostics:
    m_hat: float
    M_hat: float
    L_hat: float
    degenerate: bool = False


def curvature_diagnostics(model, dataset, probe_count, radius, anchor, seed=0):
    """Empirical strong-convexity, smoothness and Hessian-Lipschitz estimates.

    Probes ``probe_count`` points uniformly in the ball of ``radius`` around
    ``anchor``. ``m_hat``/``M_hat`` are the extreme eigenvalues of the mean
    Hessian over all probes and ``L_hat`` the largest
    ``||H(a) - H(b)||_2 / ||a - b||_2`` over probe pairs. Values are advisory.
    """
    if probe_count < 2:
        raise ValueError("probe_count must be at least 2")
    anchor = as_vector(anchor, dataset.p, "anchor")
    rng = np.random.default_rng(seed)
    p = dataset.p
    dirs = rng.standard_normal((probe_count, p))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = radius * rng.uniform(size=(probe_count, 1)) ** (1.0 / p)
    probes = anchor + dirs / norms * radii

    hess = [empirical_hessian(model, th, dataset) for th in probes]
    eigs = [np.linalg.eigvalsh((h + h.T) / 2.0) for h in hess]
    m_hat = float(min(e[0] for e in eigs))
    M_hat = float(max(e[-1] for e in eigs))

    L_hat = 0.0
    degenerate = True
    for i in range(probe_count):
        for j in range(i + 1, probe_count):
            dist = float(np.linalg.norm(probes[i] - probes[j]))
            if dist <= 1e-12:
                continue
            degenerate = False
            L_hat = max(L_hat, float(np.linalg.norm(hess[i] - hess[j], 2)) / dist)
    return CurvatureDiagnostics(m_hat, M_hat, L_hat, degenerate)
