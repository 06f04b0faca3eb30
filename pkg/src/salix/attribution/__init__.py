"""Feature attribution: RFE, SHAP, Sobol GSA and rank comparison."""

from .compare import RankComparison, comparison_table, rank_compare
from .results import METHODS, AttributionResult
from .rfe import RfeTrace, rfe
from .shap import (ShapExplanation, sample_background, shap_exact, shap_exact_rows, shap_kernel,
                   shap_kernel_rows, shap_summary)
from .sobol import SobolDesign, SobolIndices, gsa_over_model, sobol_design, sobol_indices

__all__ = [
    "METHODS", "AttributionResult", "RankComparison", "rank_compare", "comparison_table",
    "RfeTrace", "rfe", "ShapExplanation", "shap_exact", "shap_exact_rows", "shap_kernel",
    "shap_kernel_rows", "shap_summary", "sample_background", "SobolDesign", "SobolIndices",
    "sobol_design", "sobol_indices", "gsa_over_model",
]
