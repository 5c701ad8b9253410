from .car import (
    PrecisionSummary,
    SpatialConfig,
    build_precision,
    car_log_density,
    field_log_weights,
    field_to_weights,
    gamma_weights,
    logistic_weight,
    precision_for_positions,
    sample_field,
    single_site_prior_delta,
)

__all__ = [
    "PrecisionSummary",
    "SpatialConfig",
    "build_precision",
    "car_log_density",
    "field_log_weights",
    "field_to_weights",
    "gamma_weights",
    "logistic_weight",
    "precision_for_positions",
    "sample_field",
    "single_site_prior_delta",
]
