from .settings import AdaptiveScale, ChainOutput, SamplerSettings
from .base_sampler import BaseSampler, initial_means
from .mam_sampler import MamSampler, run_mam
from .car_sampler import CarMamSampler, marginal_unit_log_lik, run_car_mam, sample_eta, sample_x
from .negbinmix_sampler import NegBinMixSampler, run_negbinmix
from .chains import chain_seeds, run_chains
from .updates import (
    sample_categorical,
    sample_mu_additive,
    sample_mu_mh,
    sample_phi,
    sample_pi,
    sample_s,
    sample_z_star,
)

__all__ = [
    "AdaptiveScale",
    "ChainOutput",
    "SamplerSettings",
    "BaseSampler",
    "initial_means",
    "MamSampler",
    "run_mam",
    "CarMamSampler",
    "marginal_unit_log_lik",
    "run_car_mam",
    "sample_eta",
    "sample_x",
    "NegBinMixSampler",
    "run_negbinmix",
    "chain_seeds",
    "run_chains",
    "sample_categorical",
    "sample_mu_additive",
    "sample_mu_mh",
    "sample_phi",
    "sample_pi",
    "sample_s",
    "sample_z_star",
]
