"""Scikit-learn estimators fitted by robust Newton's method.

:class:`RobustNewtonRegressor` fits a linear model and
:class:`RobustNewtonClassifier` a binary logistic model. Neither adds an
intercept column; append one to ``X`` if needed.
"""

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .cg_newton import CgConfig, cg_robust_newton
from .estimators import HuberConfig, MomConfig
from .models import GlmModel, LabeledDataset
from .newton import NewtonConfig, robust_gradient_descent, robust_newton
from .robust_derivatives import Kind, RobustConfig

_SOLVERS = ("newton", "cg", "gd")


class _RobustGlm(BaseEstimator):
    def __init__(self, robust="huber", epsilon=0.1, delta=0.1, c_interval=0.2, c_ball=0.2,
                 solver="newton", max_iter=30, kappa1=0.01, kappa2=0.5, zeta=1e-8,
                 eta=0.1, fd_delta=1e-9, hessian_eig_floor=1e-8):
        self.robust = robust
        self.epsilon = epsilon
        self.delta = delta
        self.c_interval = c_interval
        self.c_ball = c_ball
        self.solver = solver
        self.max_iter = max_iter
        self.kappa1 = kappa1
        self.kappa2 = kappa2
        self.zeta = zeta
        self.eta = eta
        self.fd_delta = fd_delta
        self.hessian_eig_floor = hessian_eig_floor

    def _robust_config(self):
        huber = HuberConfig(self.epsilon, self.delta, self.c_interval, self.c_ball)
        return RobustConfig(Kind(self.robust), huber, MomConfig(self.delta), self.hessian_eig_floor)

    def _solve(self, X, y, model):
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        data = LabeledDataset(X, y)
        rcfg = self._robust_config()
        ncfg = NewtonConfig(self.max_iter, self.kappa1, self.kappa2, self.zeta)
        theta0 = np.zeros(X.shape[1])
        if self.solver == "newton":
            trace = robust_newton(data, model, theta0, rcfg, ncfg)
        elif self.solver == "cg":
            trace = cg_robust_newton(data, model, theta0, rcfg, CgConfig(self.fd_delta, newton=ncfg))
        else:
            trace = robust_gradient_descent(data, model, theta0, rcfg, self.eta, self.max_iter)
        self.trace_ = trace
        self.coef_ = trace.theta.copy()
        self.n_iter_ = len(trace) - 1
        self.n_features_in_ = X.shape[1]
        return self


class RobustNewtonRegressor(RegressorMixin, _RobustGlm):
    """Linear regression under contamination or heavy-tailed noise.

    Parameters
    ----------
    robust : {"huber", "heavytail", "none"}, default "huber"
        Robust mean estimator applied to per-sample gradients and Hessians.
    epsilon : float, default 0.1
        Assumed contamination fraction (Huber estimator only).
    solver : {"newton", "cg", "gd"}, default "newton"
        Newton with direct solves, Hessian-free CG Newton, or robust
        gradient descent with stepsize ``eta``.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    trace_ : IterateTrace
    n_iter_ : int
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        return self._solve(X, y, GlmModel.linear())

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_


class RobustNewtonClassifier(ClassifierMixin, _RobustGlm):
    """Binary logistic regression robust to label contamination.

    Accepts any two class labels; ``classes_[1]`` is the positive class.
    Parameters are those of :class:`RobustNewtonRegressor`.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(f"expected two classes, got {self.classes_.shape[0]}")
        target = (y == self.classes_[1]).astype(np.float64)
        return self._solve(X, target, GlmModel.logistic())

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]
