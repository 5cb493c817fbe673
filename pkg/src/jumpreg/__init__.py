"""Step-function (jump) regression: exact segmentation, model selection and break-point inference."""

from __future__ import annotations

__version__ = "0.1.0"

from jumpreg.bayes import BreakPosterior, TwoWindowScenario, bayes_estimate, mse_compare, posterior_gamma
from jumpreg.core import Dataset, StepFit, fit_from_splits, predict, profile_fit, weighted_level_score
from jumpreg.processes import (
    CompoundPoissonPath,
    MParams,
    bayes_limit_K,
    c_constants,
    ci_breakpoint,
    kappa_hat,
    m_process,
    quantile_G,
    sargmax_m,
    simulate_path,
)
from jumpreg.segmentation import PrefixSums, SegConfig, brute_force, dp_optimal, dp_pruned, greedy_init, segment_cost
from jumpreg.selection import (
    CriterionScore,
    aic_star_smooth,
    ajic_star,
    bic_smooth,
    bjic,
    bjic_finetuned,
    select,
    select_models,
)
from jumpreg.smooth import PolyFit, RobustMatrices, fit_poly, robust_matrices, sigma_true_hat

__all__ = [
    "BreakPosterior",
    "CompoundPoissonPath",
    "CriterionScore",
    "Dataset",
    "MParams",
    "PolyFit",
    "PrefixSums",
    "RobustMatrices",
    "SegConfig",
    "StepFit",
    "TwoWindowScenario",
    "aic_star_smooth",
    "ajic_star",
    "bayes_estimate",
    "bayes_limit_K",
    "bic_smooth",
    "bjic",
    "bjic_finetuned",
    "brute_force",
    "c_constants",
    "ci_breakpoint",
    "dp_optimal",
    "dp_pruned",
    "fit_from_splits",
    "fit_poly",
    "greedy_init",
    "kappa_hat",
    "m_process",
    "mse_compare",
    "posterior_gamma",
    "predict",
    "profile_fit",
    "quantile_G",
    "robust_matrices",
    "sargmax_m",
    "segment_cost",
    "select",
    "select_models",
    "sigma_true_hat",
    "simulate_path",
    "weighted_level_score",
]
