# core/mcmc/base_sampler.py
from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.model.types import Dataset, ParameterState
from .settings import AcceptanceCounter, AdaptiveScale, ChainOutput, SamplerSettings

logger = logging.getLogger(__name__)

Moves = Dict[str, Tuple[int, int]]


def initial_means(counts: np.ndarray, n: int) -> np.ndarray:
    """
    n x D starting means: quantiles i / (n + 1), i = 1..n, of the nonzero counts
    per condition, pushed apart so that consecutive clusters differ by at least 50%.
    """
    counts = np.asarray(counts)
    D = counts.shape[1]
    mu = np.ones((n, D))
    levels = np.arange(1, n + 1) / (n + 1)
    for d in range(D):
        nonzero = counts[counts[:, d] > 0, d]
        if nonzero.size == 0:
            logger.warning("Condition %d has no nonzero counts; starting means at 1", d + 1)
            q = np.ones(n)
        else:
            q = np.quantile(nonzero.astype(float), levels)
        q = np.maximum(q, 0.5)
        for i in range(1, n):
            q[i] = max(q[i], 1.5 * q[i - 1])
        mu[:, d] = q
    return mu


class ChainRecorder:
    """Collects thinned post-burn-in draws, allocation indicators and running means."""

    def __init__(self, p: int, n_components: int):
        self.draws: Dict[str, List[np.ndarray]] = {}
        self.alloc_counts = np.zeros((p, n_components))
        self.track_sums: Dict[str, np.ndarray] = {}
        self.iterations: List[int] = []

    def record(self, it: int, z_star: np.ndarray, snapshot: Dict[str, np.ndarray], tracks: Dict[str, np.ndarray]) -> None:
        self.iterations.append(it)
        self.alloc_counts[np.arange(z_star.shape[0]), z_star] += 1.0
        for name, value in snapshot.items():
            self.draws.setdefault(name, []).append(np.array(value, dtype=float, copy=True))
        for name, value in tracks.items():
            if name in self.track_sums:
                self.track_sums[name] += value
            else:
                self.track_sums[name] = np.array(value, dtype=float, copy=True)

    @property
    def n(self) -> int:
        return len(self.iterations)

    def stacked_draws(self) -> Dict[str, np.ndarray]:
        return {name: np.stack(values) for name, values in self.draws.items()}

    def alloc_probs(self) -> np.ndarray:
        return self.alloc_counts / max(self.n, 1)

    def track_means(self) -> Dict[str, np.ndarray]:
        return {name: total / max(self.n, 1) for name, total in self.track_sums.items()}


class BaseSampler(ABC):
    """
    Metropolis-within-Gibbs driver. Subclasses provide the state initialisation,
    one sweep of updates and what to store; this class owns the iteration loop,
    burn-in adaptation of proposal scales, thinning and bookkeeping.
    """
    model_name: str = ""

    def __init__(self, settings: SamplerSettings):
        self.settings = settings
        self.scales: Dict[str, AdaptiveScale] = {}
        self.counters: Dict[str, AcceptanceCounter] = {}

    # ---------------- subclass API ----------------

    def validate(self, data: Dataset) -> None:
        return None

    @abstractmethod
    def proposal_scales(self) -> Dict[str, float]:
        raise NotImplementedError

    @abstractmethod
    def initial_state(self, data: Dataset, rng: np.random.Generator) -> ParameterState:
        raise NotImplementedError

    @abstractmethod
    def sweep(self, data: Dataset, state: ParameterState, rng: np.random.Generator) -> Tuple[Moves, float]:
        """One full iteration; returns the Metropolis move counts and the mixture log-likelihood."""
        raise NotImplementedError

    @abstractmethod
    def snapshot(self, state: ParameterState) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    @abstractmethod
    def component_labels(self) -> List[str]:
        raise NotImplementedError

    def tracks(self, state: ParameterState) -> Dict[str, np.ndarray]:
        return {}

    # ---------------- public API ----------------

    def run(self, data: Dataset) -> ChainOutput:
        self.validate(data)
        s = self.settings
        rng = np.random.default_rng(s.seed)
        self.scales = {name: AdaptiveScale(name, sd) for name, sd in self.proposal_scales().items()}
        self.counters = {name: AcceptanceCounter() for name in self.scales}

        state = self.initial_state(data, rng)
        labels = self.component_labels()
        recorder = ChainRecorder(data.p, len(labels))
        trace = np.empty(s.n_iter)

        logger.info(
            "Starting %s chain: p=%d D=%d components=%d iterations=%d burn-in=%d thin=%d seed=%d",
            self.model_name, data.p, data.D, len(labels), s.n_iter, s.n_burnin, s.thin, s.seed,
        )
        started = time.perf_counter()

        for it in range(s.n_iter):
            burning = it < s.n_burnin
            moves, log_lik = self.sweep(data, state, rng)
            trace[it] = log_lik
            self._book_moves(moves, burning)

            if not burning and (it - s.n_burnin) % s.thin == 0:
                recorder.record(it, state.z_star, self.snapshot(state), self.tracks(state))

            if s.log_every and (it + 1) % s.log_every == 0:
                logger.debug(
                    "%s iter %d/%d log-lik %.3f scales %s",
                    self.model_name, it + 1, s.n_iter, log_lik,
                    {name: round(sc.sd, 4) for name, sc in self.scales.items()},
                )

        runtime = time.perf_counter() - started
        logger.info("Finished %s chain in %.1fs (%d stored draws)", self.model_name, runtime, recorder.n)
        return self._finish(recorder, trace, labels, runtime)

    # ---------------- internals ----------------

    def _book_moves(self, moves: Moves, burning: bool) -> None:
        for name, (accepted, proposed) in moves.items():
            if not proposed:
                continue
            if burning:
                if self.settings.adapt:
                    self.scales[name].update(accepted / proposed)
            else:
                self.counters[name].add(accepted, proposed)

    def _finish(self, recorder: ChainRecorder, trace: np.ndarray, labels: List[str], runtime: float) -> ChainOutput:
        alloc_probs = recorder.alloc_probs()
        tracks = recorder.track_means()
        return ChainOutput(
            model=self.model_name,
            draws=recorder.stacked_draws(),
            alloc_probs=alloc_probs,
            map_alloc=np.argmax(alloc_probs, axis=1),
            accept_rates={name: c.rate for name, c in self.counters.items()},
            log_lik_trace=trace,
            stored_iterations=np.asarray(recorder.iterations, dtype=np.int64),
            component_labels=labels,
            seed=self.settings.seed,
            runtime_sec=runtime,
            weight_track=tracks.get("weight_track"),
            field_mean=tracks.get("field_mean"),
            extra={"final_scales": {name: sc.sd for name, sc in self.scales.items()}},
        )
