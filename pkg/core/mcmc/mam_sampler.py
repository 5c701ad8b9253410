# core/mcmc/mam_sampler.py
from __future__ import annotations

import logging
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import logsumexp

from core.model.connection import connection_matrix
from core.model.density import component_means
from core.model.types import Dataset, ModelConfig, ParameterState
from .base_sampler import BaseSampler, Moves, initial_means
from .settings import ChainOutput, SamplerSettings
from .updates import (
    allocation_log_probs,
    sample_categorical,
    sample_mu_additive,
    sample_mu_mh,
    sample_phi,
    sample_pi,
    sample_s,
)

logger = logging.getLogger(__name__)


class MamSampler(BaseSampler):
    """
    Multiple allocation mixture with global primary weights.
    Sweep order: z* -> s -> mu -> phi -> pi.
    """
    model_name = "mam"

    def __init__(self, cfg: ModelConfig, settings: SamplerSettings):
        super().__init__(settings)
        self.cfg = cfg
        self.U = connection_matrix(cfg.k)

    def proposal_scales(self) -> Dict[str, float]:
        scales = {"phi": self.settings.proposal_sd_phi}
        if self.cfg.scheme != "additive":
            scales["mu"] = self.settings.proposal_sd_mu
        return scales

    def component_labels(self) -> List[str]:
        return self.U.labels()

    # ---------------- state ----------------

    def _base_state(self, data: Dataset) -> ParameterState:
        hyper = self.cfg.hyper
        return ParameterState(
            mu=initial_means(data.counts, self.cfg.k),
            phi=np.full((self.U.n_components, data.D), 0.5 * (hyper.a_phi + hyper.b_phi)),
            s=np.ones((data.p, data.D)),
            z_star=np.zeros(data.p, dtype=np.int64),
        )

    def initial_state(self, data: Dataset, rng: np.random.Generator) -> ParameterState:
        state = self._base_state(data)
        state.pi = np.full(self.cfg.k, 0.5)
        log_post, _ = allocation_log_probs(data, state, self.cfg)
        state.z_star = sample_categorical(log_post, rng)
        return state

    # ---------------- sweep ----------------

    def sweep(self, data: Dataset, state: ParameterState, rng: np.random.Generator) -> Tuple[Moves, float]:
        moves: Moves = {}
        log_post, _ = allocation_log_probs(data, state, self.cfg)
        log_lik = float(logsumexp(log_post, axis=1).sum())
        state.z_star = sample_categorical(log_post, rng)
        state.s = sample_s(data, state, self.cfg, rng)
        self._update_means(data, state, rng, moves)
        state.phi, accepted, proposed = sample_phi(data, state, self.cfg, rng, self.scales["phi"].sd)
        moves["phi"] = (accepted, proposed)
        self._update_weights(data, state, rng, moves)
        return moves, log_lik

    def _update_means(self, data: Dataset, state: ParameterState, rng: np.random.Generator, moves: Moves) -> None:
        if self.cfg.scheme == "additive":
            state.mu = sample_mu_additive(data, state, self.cfg, rng)
        else:
            state.mu, accepted, proposed = sample_mu_mh(data, state, self.cfg, rng, self.scales["mu"].sd)
            moves["mu"] = (accepted, proposed)

    def _update_weights(self, data: Dataset, state: ParameterState, rng: np.random.Generator, moves: Moves) -> None:
        state.pi = sample_pi(state.z_star, self.U, rng)

    # ---------------- recording ----------------

    def snapshot(self, state: ParameterState) -> Dict[str, np.ndarray]:
        return {
            "mu": state.mu,
            "phi": state.phi,
            "pi": state.pi,
            "mu_star": component_means(state, self.cfg, state.mu.shape[1]),
        }


def run_mam(data: Dataset, cfg: ModelConfig, settings: SamplerSettings) -> ChainOutput:
    return MamSampler(cfg, settings).run(data)
