# core/mcmc/settings.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np

from core.errors import ConfigurationError

logger = logging.getLogger(__name__)

TARGET_ACCEPT = 0.35


@dataclass(frozen=True)
class SamplerSettings:
    n_iter: int = 10000
    n_burnin: int = 5000
    thin: int = 1
    seed: int = 0
    proposal_sd_mu: float = 0.1
    proposal_sd_phi: float = 50.0
    proposal_sd_x: float = 0.5
    proposal_sd_eta: float = 0.2
    adapt: bool = True
    n_chains: int = 1
    log_every: int = 500

    def __post_init__(self):
        if self.n_iter < 1:
            raise ConfigurationError("sampler.n_iter must be at least 1", key="sampler.n_iter")
        if not 0 <= self.n_burnin < self.n_iter:
            raise ConfigurationError("sampler.n_burnin must lie in [0, n_iter)", key="sampler.n_burnin")
        if self.thin < 1:
            raise ConfigurationError("sampler.thin must be at least 1", key="sampler.thin")
        if self.n_chains < 1:
            raise ConfigurationError("sampler.n_chains must be at least 1", key="sampler.n_chains")
        for name in ("proposal_sd_mu", "proposal_sd_phi", "proposal_sd_x", "proposal_sd_eta"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"sampler.{name} must be positive", key=f"sampler.{name}")

    @property
    def n_stored(self) -> int:
        return len(range(self.n_burnin, self.n_iter, self.thin))

    def with_seed(self, seed: int) -> "SamplerSettings":
        return replace(self, seed=int(seed))


class AdaptiveScale:
    """
    Random-walk proposal scale tuned by Robbins-Monro on log(sd) toward
    TARGET_ACCEPT while adapting; frozen otherwise.
    """
    MAX_RATIO = 1e4

    def __init__(self, name: str, initial: float, target: float = TARGET_ACCEPT):
        self.name = name
        self.initial = float(initial)
        self.target = target
        self._log_sd = math.log(initial)
        self._steps = 0

    @property
    def sd(self) -> float:
        return math.exp(self._log_sd)

    def update(self, accept_fraction: float) -> None:
        self._steps += 1
        gain = self._steps ** -0.6
        self._log_sd += gain * (accept_fraction - self.target)
        lo = math.log(self.initial / self.MAX_RATIO)
        hi = math.log(self.initial * self.MAX_RATIO)
        if not lo <= self._log_sd <= hi:
            logger.warning("Proposal scale for %s clamped at %.3g", self.name, math.exp(min(max(self._log_sd, lo), hi)))
            self._log_sd = min(max(self._log_sd, lo), hi)


@dataclass
class AcceptanceCounter:
    accepted: int = 0
    proposed: int = 0

    def add(self, accepted: int, proposed: int) -> None:
        self.accepted += int(accepted)
        self.proposed += int(proposed)

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


@dataclass
class ChainOutput:
    """
    Result of one chain. `draws` maps parameter names to arrays whose first axis
    is the stored iteration; `alloc_probs` is the p x k* average of the z* indicators.
    """
    model: str
    draws: Dict[str, np.ndarray]
    alloc_probs: np.ndarray
    map_alloc: np.ndarray
    accept_rates: Dict[str, float]
    log_lik_trace: np.ndarray
    stored_iterations: np.ndarray
    component_labels: List[str]
    seed: int
    runtime_sec: float = 0.0
    weight_track: Optional[np.ndarray] = None
    field_mean: Optional[np.ndarray] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return int(len(self.stored_iterations))

    @property
    def n_components(self) -> int:
        return int(self.alloc_probs.shape[1])
