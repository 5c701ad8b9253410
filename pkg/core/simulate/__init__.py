from .simulate_service import (
    DEFAULT_MEANS,
    DEFAULT_PHI,
    FIELD_KINDS,
    SCENARIO_KINDS,
    Scenario,
    bin_positions,
    default_means,
    simulate_car_field,
    simulate_car_mam,
    simulate_mam,
    simulate_scenario,
    simulate_segments,
    uniform_positions,
)

__all__ = [
    "DEFAULT_MEANS",
    "DEFAULT_PHI",
    "FIELD_KINDS",
    "SCENARIO_KINDS",
    "Scenario",
    "bin_positions",
    "default_means",
    "simulate_car_field",
    "simulate_car_mam",
    "simulate_mam",
    "simulate_scenario",
    "simulate_segments",
    "uniform_positions",
]
