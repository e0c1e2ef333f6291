"""Monte-Carlo experiments and concentration suites."""

from .audits import erp_batch, werp_batch
from .concentration import kashin_reference, omega_concentration, singular_value_concentration, xnorm_concentration
from .harness import ResultTable, TrialGrid, binomial_stderr, fit_slope, manifest, median_stderr, run_tasks
from .recovery import (
    EXACT_TOL,
    encode_decode,
    error_scaling,
    exact_recovery_curve,
    l1_stability_check,
    l1_stability_experiment,
    oversampling,
    quantization_sweep,
)

__all__ = [
    "EXACT_TOL",
    "ResultTable",
    "TrialGrid",
    "binomial_stderr",
    "encode_decode",
    "erp_batch",
    "error_scaling",
    "exact_recovery_curve",
    "fit_slope",
    "kashin_reference",
    "l1_stability_check",
    "l1_stability_experiment",
    "manifest",
    "median_stderr",
    "omega_concentration",
    "oversampling",
    "quantization_sweep",
    "run_tasks",
    "singular_value_concentration",
    "werp_batch",
    "xnorm_concentration",
]
