from .metrics import component_occupancy, misclassification, misclassification_unstructured, primary_membership
from .diagnostics import (
    ChainSummary,
    batch_means_mcse,
    geweke_z,
    potential_scale_reduction,
    summarize_chain,
)

__all__ = [
    "component_occupancy",
    "misclassification",
    "misclassification_unstructured",
    "primary_membership",
    "ChainSummary",
    "batch_means_mcse",
    "geweke_z",
    "potential_scale_reduction",
    "summarize_chain",
]
