"""Zero-order optimization of Lipschitz nonsmooth nonconvex objectives with Goldstein-stationarity certificates."""

from zo_goldstein.highprob import ValidatedResult, ValidationParams, derive_validation_params, run_validated
from zo_goldstein.objective import StochasticObjective, evaluate, make_builtin, reference_gradient, sample_component
from zo_goldstein.optimizer import (
    OptimizerConfig,
    RunResult,
    baseline_sgd_smoothed,
    clip_to_ball,
    derive_hyperparams,
    run,
)
from zo_goldstein.smoothing import (
    batched_grad_estimate,
    grad_estimate,
    sample_unit_ball,
    sample_unit_sphere,
    smoothed_grad_mc,
    smoothed_value_mc,
)
from zo_goldstein.stationarity import (
    StationarityCertificate,
    goldstein_upper_certificate,
    min_norm_in_hull,
    window_certificate,
)

__all__ = [
    "OptimizerConfig",
    "RunResult",
    "StationarityCertificate",
    "StochasticObjective",
    "ValidatedResult",
    "ValidationParams",
    "baseline_sgd_smoothed",
    "batched_grad_estimate",
    "clip_to_ball",
    "derive_hyperparams",
    "derive_validation_params",
    "evaluate",
    "goldstein_upper_certificate",
    "grad_estimate",
    "make_builtin",
    "min_norm_in_hull",
    "reference_gradient",
    "run",
    "run_validated",
    "sample_component",
    "sample_unit_ball",
    "sample_unit_sphere",
    "smoothed_grad_mc",
    "smoothed_value_mc",
    "window_certificate",
]
