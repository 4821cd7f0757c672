"""Hessian-free robust Newton via conjugate gradients.

Newton directions are obtained by running CG on ``H dx = -g`` where every
Hessian-vector product is a forward difference of robust gradients,
``(g(theta + fd_delta * v) - g(theta)) / fd_delta``.
"""

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._validation import as_vector, check_positive
from .newton import (
    IterateTrace,
    IterRecord,
    NewtonConfig,
    _param_error,
    backtracking_linesearch,
)
from .robust_derivatives import robust_gradient, robust_loss_value


@dataclass(frozen=True)
class CgConfig:
    """``inner_iters=None`` means one CG step per parameter dimension."""

    fd_delta: float = 1e-9
    inner_iters: Optional[int] = None
    residual_tol: float = 0.0
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    random_init: bool = False
    seed: int = 0

    def __post_init__(self):
        check_positive(self.fd_delta, "fd_delta")
        if self.inner_iters is not None and int(self.inner_iters) < 1:
            raise ValueError("inner_iters must be at least 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")


class CgStep(NamedTuple):
    direction: np.ndarray
    n_inner: int
    breakdown: bool
    residual_norms: list


def hv_product(dataset, model, theta, v, rcfg, fd_delta, g_theta=None):
    """Forward-difference Hessian-vector product from robust gradients.

    Round-off in the difference grows like ``eps * ||g|| / fd_delta``; with
    exact gradients an increment near ``1e-6`` balances it against the
    truncation error.
    ``g_theta`` may carry a cached ``robust_gradient`` at ``theta``.
    """
    check_positive(fd_delta, "fd_delta")
    theta = as_vector(theta, dataset.p)
    v = as_vector(v, dataset.p, "v")
    if not np.any(v):
        return np.zeros_like(v)
    if g_theta is None:
        g_theta = robust_gradient(dataset, model, theta, rcfg)
    g_shift = robust_gradient(dataset, model, theta + fd_delta * v, rcfg)
    return (g_shift - g_theta) / fd_delta


def conjugate_gradient(hv, b, n_iter, residual_tol=0.0, x0=None):
    """CG for ``A x = b`` given only the product ``hv(v) = A v``.

    Stops early on a residual of norm ``<= residual_tol`` or on nonpositive
    curvature ``p^T A p``, in which case the last iterate is returned with
    ``breakdown=True``.
    """
    b = np.asarray(b, dtype=np.float64)
    if x0 is None:
        x = np.zeros_like(b)
        r = -b
    else:
        x = np.array(x0, dtype=np.float64)
        r = hv(x) - b
    d = -r
    rr = float(r @ r)
    norms = [math.sqrt(rr)]
    breakdown = False
    k = 0
    while k < n_iter:
        if rr == 0.0 or norms[-1] <= residual_tol:
            break
        hd = hv(d)
        curv = float(d @ hd)
        if not curv > 0.0:
            breakdown = True
            break
        step = rr / curv
        x = x + step * d
        r = r + step * hd
        rr_new = float(r @ r)
        d = -r + (rr_new / rr) * d
        rr = rr_new
        norms.append(math.sqrt(rr))
        k += 1
    return CgStep(x, k, breakdown, norms)


def cg_newton_step(dataset, model, theta, rcfg, ccfg, g_theta=None):
    """Approximate Newton direction solving ``H dx = -g`` by CG on robust HVPs."""
    theta = as_vector(theta, dataset.p)
    if g_theta is None:
        g_theta = robust_gradient(dataset, model, theta, rcfg)
    n_iter = dataset.p if ccfg.inner_iters is None else int(ccfg.inner_iters)
    x0 = None
    if ccfg.random_init:
        x0 = np.random.default_rng(ccfg.seed).standard_normal(dataset.p)

    def hv(v):
        return hv_product(dataset, model, theta, v, rcfg, ccfg.fd_delta, g_theta=g_theta)

    return conjugate_gradient(hv, -g_theta, n_iter, ccfg.residual_tol, x0=x0)


def cg_robust_newton(dataset, model, theta0, rcfg, ccfg, solver="NCGM"):
    """Robust Newton's method with CG directions; linesearch as in ``robust_newton``.

    ``decrement_sq`` holds ``-g^T dx``. Inner curvature breakdowns are
    recorded as ``"CurvatureBreakdown"`` flags on the iterate they occurred at.
    """
    ncfg = ccfg.newton
    theta = as_vector(theta0, dataset.p, "theta0").copy()
    trace = IterateTrace(solver)
    alpha_prev = math.nan
    flags = ()
    for t in range(ncfg.max_iters + 1):
        start = time.monotonic()
        g = robust_gradient(dataset, model, theta, rcfg)
        f = robust_loss_value(dataset, model, theta, rcfg)
        gnorm = float(np.linalg.norm(g))
        step = cg_newton_step(dataset, model, theta, rcfg, ccfg, g_theta=g)
        dx = step.direction
        rec_flags = flags + (("CurvatureBreakdown",) if step.breakdown else ())
        record = IterRecord(t, theta.copy(), alpha_prev, gnorm, float(-g @ dx), f, False,
                            _param_error(dataset, theta), 0.0, rec_flags)
        trace.records.append(record)
        if t == ncfg.max_iters or gnorm <= ncfg.grad_tol or not np.all(np.isfinite(dx)):
            record.elapsed = time.monotonic() - start
            if not np.all(np.isfinite(dx)):
                trace.status = "SolveFailure"
            break
        ls = backtracking_linesearch(dataset, model, theta, dx, g, rcfg, ncfg, f_theta=f)
        theta = theta + ls.alpha * dx
        alpha_prev = ls.alpha
        flags = ("LinesearchFloor",) if ls.floored else ()
        record.elapsed = time.monotonic() - start
    return trace


def fd_delta_sweep(dataset, model, theta, v, rcfg, deltas):
    """Hessian-vector products for several finite-difference increments."""
    g = robust_gradient(dataset, model, as_vector(theta, dataset.p), rcfg)
    return {float(d): hv_product(dataset, model, theta, v, rcfg, d, g_theta=g) for d in deltas}
