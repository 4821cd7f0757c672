"""Robust Newton's method for generalized linear models.

Robust mean estimators (Huber agnostic mean, median of means), GLM losses,
robust gradient and Hessian estimates, Newton and CG-Newton optimizers, a
simulation data generator and an experiment harness.
"""

from .cg_newton import CgConfig, cg_newton_step, cg_robust_newton, hv_product
from .datagen import Scenario, ScenarioSpec, generate
from .estimators import (
    HuberConfig,
    HuberMeanEstimator,
    MedianOfMeansEstimator,
    MomConfig,
    geometric_median,
    huber_estimate,
    huber_truncate,
    mom_estimate,
    top_k_principal_subspace,
)
from .exceptions import (
    ConfigError,
    DimensionMismatch,
    EmptyCloud,
    NotSymmetric,
    RnewtError,
    SchemaMismatch,
    SingularDesign,
    SolveFailure,
)
from .linear_model import RobustNewtonClassifier, RobustNewtonRegressor
from .models import GlmModel, LabeledDataset, Link
from .newton import (
    IterateTrace,
    NewtonConfig,
    backtracking_linesearch,
    newton_decrement,
    ols_fit,
    robust_gradient_descent,
    robust_newton,
)
from .robust_derivatives import Kind, RobustConfig, robust_gradient, robust_hessian, robust_loss_value

__version__ = "0.1.0"

__all__ = [
    "CgConfig", "cg_newton_step", "cg_robust_newton", "hv_product",
    "Scenario", "ScenarioSpec", "generate",
    "HuberConfig", "HuberMeanEstimator", "MedianOfMeansEstimator", "MomConfig",
    "geometric_median", "huber_estimate", "huber_truncate", "mom_estimate",
    "top_k_principal_subspace",
    "ConfigError", "DimensionMismatch", "EmptyCloud", "NotSymmetric", "RnewtError",
    "SchemaMismatch", "SingularDesign", "SolveFailure",
    "RobustNewtonClassifier", "RobustNewtonRegressor",
    "GlmModel", "LabeledDataset", "Link",
    "IterateTrace", "NewtonConfig", "backtracking_linesearch", "newton_decrement", "ols_fit",
    "robust_gradient_descent", "robust_newton",
    "Kind", "RobustConfig", "robust_gradient", "robust_hessian", "robust_loss_value",
]
