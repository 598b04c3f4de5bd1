"""Metrics, cross-validated models, experiment drivers and reports."""

from .harness import (
    ABLATION_CONFIGS,
    FEATURE_SETS,
    EvalData,
    ablation_check,
    compare_hybrid,
    depth_check,
    depth_stratified_eval,
    disagreement_correlation,
    feature_matrix,
    informative_subset,
    population_for,
    run_ablation,
    run_feature_eval,
    sample_eval,
)
from .metrics import MetricError, cohens_d, f1_score, mann_whitney_u, pearson_r, roc_auc
from .models import Standardizer, cross_validate, fit_logistic, logistic_loss, stratified_kfold
from .report import EvalReport

__all__ = [
    "ABLATION_CONFIGS", "FEATURE_SETS", "EvalData", "EvalReport", "MetricError", "Standardizer",
    "ablation_check", "cohens_d", "compare_hybrid", "cross_validate", "depth_check", "depth_stratified_eval",
    "disagreement_correlation", "f1_score", "feature_matrix", "fit_logistic", "informative_subset",
    "logistic_loss", "mann_whitney_u", "pearson_r", "population_for", "roc_auc", "run_ablation",
    "run_feature_eval", "sample_eval", "stratified_kfold",
]
