"""Robust multivariate mean estimators.

Two estimators are provided:

* :func:`huber_estimate`, a recursive agnostic mean for Huber
  epsilon-contaminated samples. Outliers are first truncated (shortest
  interval in 1-d, smallest ball around a coordinate-wise robust center
  otherwise), then the coordinates are split along the top principal
  components of the truncated covariance and the estimator recurses on the
  dominant half.
* :func:`mom_estimate`, a median-of-means estimator for heavy-tailed samples
  which combines block means through their geometric median.

Both operate on point clouds, i.e. ``(n, d)`` float arrays, and are pure
functions of their inputs. Scikit-learn style wrappers live at the bottom of
the module.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import as_cloud, check_open_unit, check_positive
from .exceptions import NotSymmetric

F_MIN = 0.5
VERTEX_TOL = 1e-12


@dataclass(frozen=True)
class HuberConfig:
    """Parameters of the Huber agnostic-mean estimator.

    ``c_interval`` and ``c_ball`` are the unnamed slack constants of the
    interval and ball truncation steps. The defaults keep retained fractions
    near ``(1 - epsilon)**2`` for samples of a few thousand points in ten
    dimensions; larger values quickly hit the 0.5 floor.
    """

    epsilon: float = 0.1
    delta: float = 0.1
    c_interval: float = 0.2
    c_ball: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon!r}")
        check_open_unit(self.delta, "delta")
        check_positive(self.c_interval, "c_interval")
        check_positive(self.c_ball, "c_ball")


@dataclass(frozen=True)
class MomConfig:
    """Parameters of the median-of-means estimator."""

    delta: float = 0.1
    max_buckets: int = 1000
    weiszfeld_tol: float = 1e-9
    weiszfeld_max_iter: int = 200

    def __post_init__(self):
        check_open_unit(self.delta, "delta")
        if int(self.max_buckets) < 1:
            raise ValueError("max_buckets must be a positive integer")
        check_positive(self.weiszfeld_tol, "weiszfeld_tol")
        if int(self.weiszfeld_max_iter) < 1:
            raise ValueError("weiszfeld_max_iter must be a positive integer")


@dataclass
class EstimateInfo:
    """Diagnostics collected while running an estimator."""

    clamped: bool = False
    degenerate: bool = False
    converged: bool = True
    n_buckets: int = 0
    depth: int = 0
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# retained fractions


def interval_fraction(n, epsilon, delta, c_interval):
    """Fraction of points kept by the 1-d interval truncation, and whether it was clamped."""
    raw = (1.0 - epsilon - c_interval * math.sqrt(math.log(n / delta) / n)) * (1.0 - epsilon)
    return _clamp_fraction(raw)


def ball_fraction(n, d, epsilon, delta, c_ball):
    """Fraction of points kept by the ball truncation, and whether it was clamped."""
    arg = math.log(n / (d * delta))
    slack = c_ball * math.sqrt(max(arg, 0.0) * d / n)
    raw = (1.0 - epsilon - slack) * (1.0 - epsilon)
    return _clamp_fraction(raw)


def _clamp_fraction(raw):
    if raw < F_MIN:
        return F_MIN, True
    if raw > 1.0:
        return 1.0, True
    return raw, False


def _keep_count(fraction, n):
    # tolerance absorbs round-off when fraction * n is an integer
    k = math.ceil(fraction * n - 1e-9)
    return min(max(k, 1), n)


# ---------------------------------------------------------------------------
# truncation


def _interval_masks(columns, k):
    """Shortest window of ``k`` sorted values in every column of ``columns``.

    Returns a boolean mask of the points inside each column's window. Ties
    between equally short windows go to the leftmost one.
    """
    n = columns.shape[0]
    srt = np.sort(columns, axis=0)
    widths = srt[k - 1:] - srt[: n - k + 1]
    start = np.argmin(widths, axis=0)
    cols = np.arange(columns.shape[1])
    lo = srt[start, cols]
    hi = srt[start + k - 1, cols]
    return (columns >= lo) & (columns <= hi)


def _column_centers(cloud, epsilon, delta, c_interval, info):
    """Per-coordinate 1-d Huber estimates (interval truncation, then mean)."""
    n = cloud.shape[0]
    frac, clamped = interval_fraction(n, epsilon, delta, c_interval)
    info.clamped |= clamped
    mask = _interval_masks(cloud, _keep_count(frac, n))
    return np.where(mask, cloud, 0.0).sum(axis=0) / mask.sum(axis=0)


def _truncate_mask(cloud, cfg, delta, info):
    n, d = cloud.shape
    if d == 1:
        frac, clamped = interval_fraction(n, cfg.epsilon, delta, cfg.c_interval)
        info.clamped |= clamped
        return _interval_masks(cloud, _keep_count(frac, n))[:, 0]

    center = _column_centers(cloud, cfg.epsilon, delta / d, cfg.c_interval, info)
    frac, clamped = ball_fraction(n, d, cfg.epsilon, delta, cfg.c_ball)
    info.clamped |= clamped
    k = _keep_count(frac, n)
    dist = np.sqrt(((cloud - center) ** 2).sum(axis=1))
    radius = np.partition(dist, k - 1)[k - 1]
    return dist <= radius


def huber_truncate(cloud, cfg, return_info=False):
    """Remove outliers from ``cloud`` ahead of robust averaging.

    In one dimension, keeps the points of the shortest interval holding a
    ``f`` fraction of the sample. In higher dimension, keeps the points of the
    smallest ball around the coordinate-wise Huber estimates holding an
    ``f_ball`` fraction. Both fractions are clamped to ``[0.5, 1]``.

    Parameters
    ----------
    cloud : array-like of shape (n, d) or (n,)
    cfg : HuberConfig
    return_info : bool, default False

    Returns
    -------
    kept : ndarray of shape (m, d)
        Retained points, in input order.
    info : EstimateInfo
        Only when ``return_info`` is true.
    """
    cloud = as_cloud(cloud)
    info = EstimateInfo()
    kept = cloud[_truncate_mask(cloud, cfg, cfg.delta, info)]
    return (kept, info) if return_info else kept


# ---------------------------------------------------------------------------
# principal subspace


def covariance(points):
    """Two-pass, mean-centred covariance (divides by ``n``)."""
    centred = points - points.mean(axis=0)
    return centred.T @ centred / points.shape[0]


def _eigh_sorted(cov):
    """Eigenpairs of a symmetric matrix ordered by decreasing eigenvalue.

    Ties are broken by the index of each eigenvector's largest-magnitude
    entry; vectors are signed so that entry is positive.
    """
    w, vecs = np.linalg.eigh(cov)
    d = w.shape[0]
    dominant = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[dominant, np.arange(d)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs

    scale = max(float(np.max(np.abs(w))), 1.0)
    tie_tol = 1e-10 * scale
    desc = np.argsort(-w, kind="stable")
    order = []
    group = [desc[0]]
    for j in desc[1:]:
        if w[group[-1]] - w[j] <= tie_tol:
            group.append(j)
        else:
            order.extend(sorted(group, key=lambda i: dominant[i]))
            group = [j]
    order.extend(sorted(group, key=lambda i: dominant[i]))
    order = np.asarray(order)
    return w[order], vecs[:, order]


def top_k_principal_subspace(cov, k):
    """Orthonormal basis for the span of the top ``k`` eigenvectors of ``cov``.

    Raises
    ------
    NotSymmetric
        If ``cov`` deviates from symmetry by more than ``1e-9`` relative.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {cov.shape}")
    d = cov.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    asym = np.max(np.abs(cov - cov.T)) if d else 0.0
    if asym > 1e-9 * max(1.0, float(np.max(np.abs(cov)))):
        raise NotSymmetric(f"matrix asymmetry {asym:.3e} exceeds tolerance")
    _, vecs = _eigh_sorted((cov + cov.T) / 2.0)
    return vecs[:, :k]


# ---------------------------------------------------------------------------
# Huber agnostic mean


def _huber_recursive(cloud, cfg, info, depth):
    info.depth = max(info.depth, depth)
    n, d = cloud.shape
    mask = _truncate_mask(cloud, cfg, cfg.delta, info)
    kept = cloud[mask]
    if kept.shape[0] < 2 and n >= 2:
        info.degenerate = True
        kept = cloud
    if d == 1:
        return kept.mean(axis=0)

    k = (d + 1) // 2
    _, vecs = _eigh_sorted(covariance(kept))
    top, rest = vecs[:, :k], vecs[:, k:]
    mu_top = _huber_recursive(kept @ top, cfg, info, depth + 1)
    mu_rest = (kept @ rest).mean(axis=0)
    return top @ mu_top + rest @ mu_rest


def huber_estimate(cloud, cfg=None, return_info=False):
    """Recursive Huber agnostic mean of ``cloud``.

    Parameters
    ----------
    cloud : array-like of shape (n, d) or (n,)
    cfg : HuberConfig, optional
    return_info : bool, default False
        Also return an :class:`EstimateInfo` recording clamped fractions and
        degenerate truncations (fewer than two points retained, in which case
        the untruncated mean of that level is used).

    Returns
    -------
    mu : ndarray of shape (d,)
    """
    cloud = as_cloud(cloud)
    cfg = cfg or HuberConfig()
    info = EstimateInfo()
    mu = _huber_recursive(cloud, cfg, info, 0)
    return (mu, info) if return_info else mu


# ---------------------------------------------------------------------------
# geometric median and median of means


def _gm_objective(y, points):
    return float(np.sqrt(((points - y) ** 2).sum(axis=1)).sum())


def geometric_median(points, tol=1e-9, max_iter=200, return_info=False, callback=None):
    """Point minimising the sum of Euclidean distances to ``points``.

    Weiszfeld iteration from the coordinate-wise mean, with the Vardi-Zhang
    modification when an iterate lands on a sample point. Stops once an
    update moves less than ``tol``. On non-convergence the best iterate is
    returned and ``info.converged`` is false.

    ``callback(y, objective)`` is invoked on every iterate, including the
    starting point.
    """
    points = as_cloud(points)
    check_positive(tol, "tol")
    info = EstimateInfo()
    y = points.mean(axis=0)
    best, best_obj = y, _gm_objective(y, points)
    if callback is not None:
        callback(y, best_obj)
    if points.shape[0] == 1:
        return (points[0].copy(), info) if return_info else points[0].copy()

    info.converged = False
    for _ in range(int(max_iter)):
        diff = points - y
        dist = np.sqrt((diff**2).sum(axis=1))
        at_vertex = dist < VERTEX_TOL
        far = ~at_vertex
        if not far.any():
            info.converged = True
            break
        w = 1.0 / dist[far]
        t_y = (points[far] * w[:, None]).sum(axis=0) / w.sum()
        mult = int(at_vertex.sum())
        if mult:
            r = np.linalg.norm((diff[far] * w[:, None]).sum(axis=0))
            if r <= mult:
                info.converged = True
                break
            gamma = mult / r
            y_new = max(0.0, 1.0 - gamma) * t_y + min(1.0, gamma) * y
        else:
            y_new = t_y
        step = float(np.linalg.norm(y_new - y))
        y = y_new
        obj = _gm_objective(y, points)
        if callback is not None:
            callback(y, obj)
        if obj <= best_obj:
            best, best_obj = y, obj
        if step < tol:
            info.converged = True
            break
    if not info.converged:
        info.notes.append("NonConvergence")
    return (best, info) if return_info else best


def n_buckets(delta, max_buckets, n):
    """Number of median-of-means blocks for failure probability ``delta``."""
    b = 1 + math.floor(3.5 * math.log(1.0 / delta))
    return max(1, min(b, int(max_buckets), int(n)))


def block_means(cloud, b):
    """Means of ``b`` consecutive blocks of size ``n // b``; the remainder is dropped."""
    m = cloud.shape[0] // b
    return cloud[: b * m].reshape(b, m, cloud.shape[1]).mean(axis=1)


def mom_estimate(cloud, cfg=None, return_info=False):
    """Geometric median-of-means estimate of the mean of ``cloud``.

    Blocks are formed in input order, so the result depends on point order.
    """
    cloud = as_cloud(cloud)
    cfg = cfg or MomConfig()
    b = n_buckets(cfg.delta, cfg.max_buckets, cloud.shape[0])
    means = block_means(cloud, b)
    mu, info = geometric_median(
        means, tol=cfg.weiszfeld_tol, max_iter=cfg.weiszfeld_max_iter, return_info=True
    )
    info.n_buckets = b
    return (mu, info) if return_info else mu


# ---------------------------------------------------------------------------
# scikit-learn wrappers


class HuberMeanEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`huber_estimate`.

    Attributes
    ----------
    location_ : ndarray of shape (n_features,)
    info_ : EstimateInfo
    """

    def __init__(self, epsilon=0.1, delta=0.1, c_interval=0.2, c_ball=0.2):
        self.epsilon = epsilon
        self.delta = delta
        self.c_interval = c_interval
        self.c_ball = c_ball

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        cfg = HuberConfig(self.epsilon, self.delta, self.c_interval, self.c_ball)
        self.location_, self.info_ = huber_estimate(X, cfg, return_info=True)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Center ``X`` on the robust location."""
        check_is_fitted(self, "location_")
        X = check_array(X, dtype=np.float64)
        return X - self.location_


class MedianOfMeansEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`mom_estimate`."""

    def __init__(self, delta=0.1, max_buckets=1000, tol=1e-9, max_iter=200):
        self.delta = delta
        self.max_buckets = max_buckets
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        cfg = MomConfig(self.delta, self.max_buckets, self.tol, self.max_iter)
        self.location_, self.info_ = mom_estimate(X, cfg, return_info=True)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "location_")
        X = check_array(X, dtype=np.float64)
        return X - self.location_
