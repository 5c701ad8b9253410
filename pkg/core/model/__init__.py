from .types import Dataset, Hyperparameters, ModelConfig, ParameterState, SCHEMES
from .connection import ConnectionMatrix, connection_matrix, multiple_weights, log_multiple_weights
from .schemes import combine_means, combined_means
from .density import (
    nb_log_pmf,
    unit_log_likelihood,
    component_log_likelihoods,
    mixture_log_likelihood,
)

__all__ = [
    "Dataset",
    "Hyperparameters",
    "ModelConfig",
    "ParameterState",
    "SCHEMES",
    "ConnectionMatrix",
    "connection_matrix",
    "multiple_weights",
    "log_multiple_weights",
    "combine_means",
    "combined_means",
    "nb_log_pmf",
    "unit_log_likelihood",
    "component_log_likelihoods",
    "mixture_log_likelihood",
]
