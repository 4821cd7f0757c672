"""Robust Newton's method with robust backtracking linesearch.

Also hosts the robust gradient descent baseline and the OLS oracle. Every
optimizer returns an :class:`IterateTrace`; record ``0`` describes the
initial point and record ``t`` carries the stepsize that produced
``theta_t``.
"""

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from ._validation import as_vector, check_positive
from .exceptions import SingularDesign, SolveFailure
from .robust_derivatives import (
    robust_gradient,
    robust_hessian,
    robust_loss_value,
)


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 30
    kappa1: float = 0.01
    kappa2: float = 0.5
    zeta: float = 1e-8
    min_alpha: float = 1e-12
    grad_tol: float = 0.0

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")
        if not 0.0 < self.kappa1 < 0.5:
            raise ValueError(f"kappa1 must lie in (0, 0.5), got {self.kappa1!r}")
        if not 0.0 < self.kappa2 < 1.0:
            raise ValueError(f"kappa2 must lie in (0, 1), got {self.kappa2!r}")
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        check_positive(self.min_alpha, "min_alpha")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be nonnegative")


@dataclass
class IterRecord:
    iter: int
    theta: np.ndarray
    alpha: float
    grad_norm_est: float
    decrement_sq: float
    loss_est: float
    hessian_repaired: bool
    param_error: float
    elapsed: float
    flags: tuple = ()


@dataclass
class IterateTrace:
    solver: str
    records: list = field(default_factory=list)
    status: str = "ok"

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    @property
    def theta(self):
        """Final iterate."""
        return self.records[-1].theta

    @property
    def thetas(self):
        return np.array([r.theta for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def param_errors(self):
        return self.column("param_error")

    @property
    def alphas(self):
        return self.column("alpha")

    def flagged(self, flag):
        return [r.iter for r in self.records if flag in r.flags]


class LineSearchResult(NamedTuple):
    alpha: float
    loss: float
    floored: bool
    n_evals: int


def _param_error(dataset, theta):
    if dataset.truth is None:
        return math.nan
    return float(np.linalg.norm(theta - dataset.truth))


def backtracking_linesearch(dataset, model, theta, direction, g_theta, rcfg, ncfg, f_theta=None):
    """Robust Armijo backtracking.

    Starting from ``alpha = 1``, shrinks by ``kappa2`` until the robust loss at
    ``theta + alpha * direction`` is at most
    ``f(theta) + kappa1 * alpha * g^T direction + zeta``. Stepsizes stay on the
    lattice ``kappa2**k``; if the next candidate would drop below
    ``min_alpha`` the current one is returned with ``floored=True``.
    """
    theta = as_vector(theta)
    direction = as_vector(direction, theta.shape[0], "direction")
    if not np.all(np.isfinite(direction)):
        raise ValueError("direction must be finite")
    if f_theta is None:
        f_theta = robust_loss_value(dataset, model, theta, rcfg)
    slope = float(np.dot(g_theta, direction))
    k = 0
    alpha = 1.0
    n_evals = 0
    while True:
        f_new = robust_loss_value(dataset, model, theta + alpha * direction, rcfg)
        n_evals += 1
        if f_new <= f_theta + ncfg.kappa1 * alpha * slope + ncfg.zeta:
            return LineSearchResult(alpha, f_new, False, n_evals)
        nxt = ncfg.kappa2 ** (k + 1)
        if nxt < ncfg.min_alpha:
            return LineSearchResult(alpha, f_new, True, n_evals)
        k += 1
        alpha = nxt


def _cholesky(matrix):
    try:
        return scipy.linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveFailure(f"Hessian factorization failed: {exc}") from exc


def newton_decrement(g, H):
    """``sqrt(g^T H^{-1} g)`` for a positive definite (repaired) Hessian."""
    matrix = H.matrix if hasattr(H, "matrix") else np.asarray(H, dtype=np.float64)
    g = as_vector(g, matrix.shape[0], "g")
    sol = scipy.linalg.cho_solve(_cholesky(matrix), g)
    return math.sqrt(max(float(g @ sol), 0.0))


def newton_direction(g, H):
    """Solve ``H dx = -g``; returns ``(dx, g^T H^{-1} g)``."""
    dx = -scipy.linalg.cho_solve(_cholesky(H.matrix), g)
    if not np.all(np.isfinite(dx)):
        raise SolveFailure("Newton step is not finite")
    return dx, float(-g @ dx)


def robust_newton(dataset, model, theta0, rcfg, ncfg, solver="RNM"):
    """Robust Newton's method.

    Each iteration estimates the gradient and Hessian robustly, solves for
    the Newton step and picks the stepsize by robust backtracking. Runs
    ``ncfg.max_iters`` iterations unless the estimated gradient norm falls to
    ``ncfg.grad_tol``.

    Raises
    ------
    SolveFailure
        If the Newton system cannot be solved; the partial trace is attached
        as ``exc.trace``.
    """
    theta = as_vector(theta0, dataset.p, "theta0").copy()
    trace = IterateTrace(solver)
    alpha_prev = math.nan
    flags = ()
    for t in range(ncfg.max_iters + 1):
        start = time.monotonic()
        g = robust_gradient(dataset, model, theta, rcfg)
        H = robust_hessian(dataset, model, theta, rcfg)
        f = robust_loss_value(dataset, model, theta, rcfg)
        gnorm = float(np.linalg.norm(g))
        try:
            dx, dec_sq = newton_direction(g, H)
        except SolveFailure as exc:
            trace.records.append(
                IterRecord(t, theta.copy(), alpha_prev, gnorm, math.nan, f, H.repaired,
                           _param_error(dataset, theta), time.monotonic() - start, flags)
            )
            trace.status = "SolveFailure"
            exc.trace = trace
            raise
        record = IterRecord(t, theta.copy(), alpha_prev, gnorm, dec_sq, f, H.repaired,
                            _param_error(dataset, theta), 0.0, flags)
        trace.records.append(record)
        if t == ncfg.max_iters or gnorm <= ncfg.grad_tol:
            record.elapsed = time.monotonic() - start
            break
        ls = backtracking_linesearch(dataset, model, theta, dx, g, rcfg, ncfg, f_theta=f)
        theta = theta + ls.alpha * dx
        alpha_prev = ls.alpha
        flags = ("LinesearchFloor",) if ls.floored else ()
        record.elapsed = time.monotonic() - start
    return trace


def robust_gradient_descent(dataset, model, theta0, rcfg, eta, T, solver="RGD"):
    """Gradient descent ``theta <- theta - eta * g(theta)`` with a robust gradient.

    A non-finite iterate stops the run with ``status == "diverged"``.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    theta = as_vector(theta0, dataset.p, "theta0").copy()
    trace = IterateTrace(solver)
    for t in range(int(T) + 1):
        start = time.monotonic()
        finite = bool(np.all(np.isfinite(theta)))
        if finite:
            # overflow here is the divergence being detected, not an error
            with np.errstate(over="ignore", invalid="ignore"):
                g = robust_gradient(dataset, model, theta, rcfg)
                f = robust_loss_value(dataset, model, theta, rcfg)
                gnorm = float(np.linalg.norm(g))
        else:
            g, f, gnorm = None, math.nan, math.nan
        trace.records.append(
            IterRecord(t, theta.copy(), float(eta) if t else math.nan, gnorm, math.nan, f,
                       False, _param_error(dataset, theta), time.monotonic() - start)
        )
        if not finite or not math.isfinite(gnorm):
            trace.status = "diverged"
            break
        if t == T:
            break
        theta = theta - eta * g
    return trace


def ols_fit(dataset):
    """Normal-equations least squares ``(X^T X / n)^{-1} (X^T y / n)``."""
    X, y = dataset.X, dataset.y
    gram = X.T @ X / dataset.n
    if np.linalg.matrix_rank(gram) < dataset.p:
        raise SingularDesign("X^T X is rank deficient")
    try:
        return np.linalg.solve(gram, X.T @ y / dataset.n)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign(str(exc)) from exc


def ols_trace(dataset):
    """Single-record trace holding the OLS estimate."""
    start = time.monotonic()
    theta = ols_fit(dataset)
    trace = IterateTrace("OLS")
    trace.records.append(
        IterRecord(0, theta, math.nan, math.nan, math.nan, math.nan, False,
                   _param_error(dataset, theta), time.monotonic() - start)
    )
    return trace
