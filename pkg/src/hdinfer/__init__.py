"""Bias-corrected Ridge significance testing for high-dimensional linear models."""

from ._montecarlo import MonteCarloConfig
from .design import (
    DegenerateDesignError,
    DesignContext,
    RidgeCovariance,
    build_design,
    detection_bound,
    kappa_diagnostics,
    minvar_holds,
    ridge_covariance,
    ridge_fit,
)
from .estimators import RidgeProjectionTest, ScaledLasso
from .inference import (
    CorrectedRidgeFit,
    GroupHypothesis,
    corrected_fit,
    group_pvalue,
    single_pvalues,
)
from .io import TestReport
from .lasso import (
    ConvergenceError,
    DegenerateNoiseError,
    InitialFit,
    lasso_fit,
    scaled_lasso_fit,
)
from .multiplicity import (
    NullDistribution,
    adjust_group_pvalues,
    adjust_pvalues,
    bonferroni_holm,
    simulate_fz,
)
from .simlab import (
    ScenarioConfig,
    SimulationReport,
    generate_design,
    projection_bias_histogram,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "CorrectedRidgeFit",
    "DegenerateDesignError",
    "DegenerateNoiseError",
    "DesignContext",
    "GroupHypothesis",
    "InitialFit",
    "MonteCarloConfig",
    "NullDistribution",
    "RidgeCovariance",
    "RidgeProjectionTest",
    "ScaledLasso",
    "ScenarioConfig",
    "SimulationReport",
    "TestReport",
    "adjust_group_pvalues",
    "adjust_pvalues",
    "bonferroni_holm",
    "build_design",
    "corrected_fit",
    "detection_bound",
    "generate_design",
    "group_pvalue",
    "kappa_diagnostics",
    "lasso_fit",
    "minvar_holds",
    "projection_bias_histogram",
    "ridge_covariance",
    "ridge_fit",
    "run_scenario",
    "scaled_lasso_fit",
    "simulate_fz",
    "single_pvalues",
]
