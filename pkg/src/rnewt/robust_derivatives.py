"""Robust gradient, Hessian and loss estimates at a parameter point.

Per-sample derivatives are stacked into a point cloud and handed to one of
the robust mean estimators; ``Kind.NONE`` uses plain means and serves as the
non-robust baseline.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import models
from .estimators import HuberConfig, MomConfig, huber_estimate, mom_estimate


class Kind(str, enum.Enum):
    HUBER = "huber"
    HEAVY_TAIL = "heavytail"
    NONE = "none"


@dataclass(frozen=True)
class RobustConfig:
    kind: Kind = Kind.HUBER
    huber: HuberConfig = field(default_factory=HuberConfig)
    mom: MomConfig = field(default_factory=MomConfig)
    hessian_eig_floor: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.hessian_eig_floor < 0:
            raise ValueError("hessian_eig_floor must be nonnegative")

    @classmethod
    def none(cls):
        return cls(kind=Kind.NONE)


@dataclass(frozen=True)
class RobustHessian:
    matrix: np.ndarray
    repaired: bool
    min_eig_before: float


def flatten(matrix):
    """Row-major vectorisation of a square matrix."""
    return np.asarray(matrix, dtype=np.float64).reshape(-1)


def unflatten(vector, p=None):
    vector = np.asarray(vector, dtype=np.float64).reshape(-1)
    if p is None:
        p = int(round(np.sqrt(vector.shape[0])))
    if p * p != vector.shape[0]:
        raise ValueError(f"length {vector.shape[0]} is not a perfect square")
    return vector.reshape(p, p)


def robust_mean(cloud, cfg):
    """Dispatch a point cloud to the estimator selected by ``cfg.kind``."""
    if cfg.kind is Kind.HUBER:
        return huber_estimate(cloud, cfg.huber)
    if cfg.kind is Kind.HEAVY_TAIL:
        return mom_estimate(cloud, cfg.mom)
    return np.asarray(cloud, dtype=np.float64).mean(axis=0)


def robust_gradient(dataset, model, theta, cfg):
    if cfg.kind is Kind.NONE:
        return models.empirical_gradient(model, theta, dataset)
    return robust_mean(models.sample_gradients(model, theta, dataset), cfg)


def repair_hessian(matrix, floor):
    """Symmetrise ``matrix`` and raise eigenvalues below ``floor`` to ``floor``."""
    sym = (matrix + matrix.T) / 2.0
    w, vecs = np.linalg.eigh(sym)
    min_eig = float(w[0])
    if min_eig >= floor:
        return RobustHessian(sym, False, min_eig)
    w = np.maximum(w, floor)
    fixed = (vecs * w) @ vecs.T
    return RobustHessian((fixed + fixed.T) / 2.0, True, min_eig)


def robust_hessian(dataset, model, theta, cfg):
    """Robust Hessian estimate, symmetrised and eigen-clipped at ``cfg.hessian_eig_floor``."""
    p = dataset.p
    if cfg.kind is Kind.NONE:
        raw = models.empirical_hessian(model, theta, dataset)
    else:
        raw = unflatten(robust_mean(models.sample_hessians(model, theta, dataset), cfg), p)
    return repair_hessian(raw, cfg.hessian_eig_floor)


def robust_loss_value(dataset, model, theta, cfg):
    """1-d robust estimate of the risk from the per-sample losses.

    For the identity link the squared error ``(y - x@theta)**2 / 2`` is used;
    it differs from the GLM loss by ``-y**2 / 2``, a shift that leaves means
    unchanged but would steer truncation by the size of ``y`` alone.
    """
    losses = models.risk_terms(model, theta, dataset)
    if cfg.kind is Kind.NONE:
        return float(losses.mean())
    return float(robust_mean(losses[:, None], cfg)[0])
