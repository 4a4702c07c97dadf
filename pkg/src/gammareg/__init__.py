"""Robust sparse linear regression via a density-power-weighted loss
with L1 regularization, plus selection, simulators, baselines and
numerical verifiers of the underlying divergence identities."""

from .errors import DegenerateFitError, DegenerateScoreError
from .model_core import (
    Dataset,
    GammaConfig,
    MmWeights,
    ModelParams,
    empirical_gamma_cross_entropy,
    gaussian_log_density,
    majorizer_value,
    mm_weights,
    penalized_loss,
    power_integral,
)
from .solver import (
    FitConfig,
    FitResult,
    cd_sweep,
    check_kkt,
    fit,
    soft_threshold,
    update_coefficient,
    update_intercept,
    update_variance,
)
from .selection import (
    CvConfig,
    CvReport,
    cross_validate,
    lambda_grid,
    lambda_zero,
    rocv_score,
)
from .initializers import ransac_init, zero_init
from .baselines import lasso_cv, lasso_fit
from .metrics import mse_coefficients, rmspe, rtmspe, tpr_tnr
from .simulation import (
    ExperimentResult,
    MethodSpec,
    SimulationSpec,
    generate,
    run_experiment,
    true_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ModelParams",
    "GammaConfig",
    "MmWeights",
    "FitConfig",
    "FitResult",
    "CvConfig",
    "CvReport",
    "SimulationSpec",
    "MethodSpec",
    "ExperimentResult",
    "DegenerateFitError",
    "DegenerateScoreError",
    "gaussian_log_density",
    "power_integral",
    "empirical_gamma_cross_entropy",
    "penalized_loss",
    "mm_weights",
    "majorizer_value",
    "soft_threshold",
    "update_intercept",
    "update_coefficient",
    "update_variance",
    "cd_sweep",
    "fit",
    "check_kkt",
    "lambda_zero",
    "lambda_grid",
    "rocv_score",
    "cross_validate",
    "ransac_init",
    "zero_init",
    "lasso_fit",
    "lasso_cv",
    "rmspe",
    "mse_coefficients",
    "tpr_tnr",
    "rtmspe",
    "generate",
    "true_coefficients",
    "run_experiment",
]
