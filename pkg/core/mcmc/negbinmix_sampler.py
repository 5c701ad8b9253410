# core/mcmc/negbinmix_sampler.py
from __future__ import annotations

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from core.errors import ConfigurationError
from core.model.density import component_log_likelihoods
from core.model.types import Dataset, Hyperparameters, ParameterState
from .base_sampler import BaseSampler, Moves, initial_means
from .settings import ChainOutput, SamplerSettings
from .updates import MIN_MEAN, per_component_sums, reflected_phi_step, sample_categorical

logger = logging.getLogger(__name__)


class NegBinMixSampler(BaseSampler):
    """
    Conventional mixture of n mutually exclusive Negative Binomial components with
    Dirichlet(1, ..., 1) weights. Each component owns its mean (Gamma prior, Gibbs via
    the Gamma-Poisson augmentation) and its dispersions (reflected random walk).
    `state.pi` holds the n mixture weights and `state.mu` the n x D component means.
    """
    model_name = "negbinmix"

    def __init__(
        self,
        n_components: int,
        settings: SamplerSettings,
        hyper: Optional[Hyperparameters] = None,
        fix_first_mean: Optional[float] = None,
    ):
        super().__init__(settings)
        if n_components < 2:
            raise ConfigurationError("NegBinMix needs at least 2 components", key="fit.n_components")
        if fix_first_mean is not None and not fix_first_mean > 0:
            raise ConfigurationError("fit.fix_first_mean must be positive", key="fit.fix_first_mean")
        self.n_components = int(n_components)
        self.hyper = hyper or Hyperparameters()
        self.fix_first_mean = fix_first_mean

    def proposal_scales(self) -> Dict[str, float]:
        return {"phi": self.settings.proposal_sd_phi}

    def component_labels(self) -> List[str]:
        return [f"c{h}" for h in range(self.n_components)]

    def initial_state(self, data: Dataset, rng: np.random.Generator) -> ParameterState:
        n = self.n_components
        if self.fix_first_mean is not None:
            mu = np.vstack([np.full((1, data.D), self.fix_first_mean), initial_means(data.counts, n - 1)])
        else:
            mu = initial_means(data.counts, n)
        state = ParameterState(
            mu=mu,
            phi=np.full((n, data.D), 0.5 * (self.hyper.a_phi + self.hyper.b_phi)),
            s=np.ones((data.p, data.D)),
            z_star=np.zeros(data.p, dtype=np.int64),
            pi=np.full(n, 1.0 / n),
        )
        log_post, _ = self._allocation_log_probs(data, state)
        state.z_star = sample_categorical(log_post, rng)
        return state

    def _allocation_log_probs(self, data: Dataset, state: ParameterState) -> Tuple[np.ndarray, np.ndarray]:
        L = component_log_likelihoods(data.counts, state.mu, state.phi)
        return np.log(state.pi)[None, :] + L, L

    def sweep(self, data: Dataset, state: ParameterState, rng: np.random.Generator) -> Tuple[Moves, float]:
        hyper = self.hyper
        n = self.n_components
        log_post, _ = self._allocation_log_probs(data, state)
        log_lik = float(logsumexp(log_post, axis=1).sum())
        z = sample_categorical(log_post, rng)
        state.z_star = z

        # Gamma-Poisson augmentation, then conjugate means.
        state.s = rng.gamma(state.phi[z] + data.counts, 1.0 / (state.phi[z] + state.mu[z]))
        count_sums = per_component_sums(z, data.counts.astype(float), n)
        s_sums = per_component_sums(z, state.s, n)
        mu = np.maximum(rng.gamma(hyper.a_mu + count_sums, 1.0 / (hyper.b_mu + s_sums)), MIN_MEAN)
        if self.fix_first_mean is not None:
            mu[0] = self.fix_first_mean
        state.mu = mu

        state.phi, accepted, proposed = reflected_phi_step(
            data.counts, z, state.mu, state.phi, hyper, rng, self.scales["phi"].sd
        )

        occupancy = np.bincount(z, minlength=n)
        state.pi = np.clip(rng.dirichlet(1.0 + occupancy), 1e-300, None)
        return {"phi": (accepted, proposed)}, log_lik

    def snapshot(self, state: ParameterState) -> Dict[str, np.ndarray]:
        return {"mu": state.mu, "phi": state.phi, "pi": state.pi}


def run_negbinmix(
    data: Dataset,
    n_components: int,
    settings: SamplerSettings,
    fix_first_mean: Optional[float] = None,
    hyper: Optional[Hyperparameters] = None,
) -> ChainOutput:
    return NegBinMixSampler(n_components, settings, hyper=hyper, fix_first_mean=fix_first_mean).run(data)
