"""Input validation helpers shared across modules."""

import numpy as np

from .exceptions import DimensionMismatch, EmptyCloud


def as_cloud(points):
    """Return ``points`` as a float64 ``(n, d)`` array.

    One-dimensional input is read as ``n`` scalar points.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionMismatch(f"point cloud must be 1-d or 2-d, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise EmptyCloud("point cloud has no points")
    if arr.shape[1] == 0:
        raise DimensionMismatch("points must have dimension d >= 1")
    return arr


def as_vector(theta, p=None, name="theta"):
    v = np.asarray(theta, dtype=np.float64).reshape(-1)
    if p is not None and v.shape[0] != p:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {p}")
    return v


def check_open_unit(value, name):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
