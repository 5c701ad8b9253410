# core/evaluate/diagnostics.py
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.errors import DomainError
from core.mcmc.settings import ChainOutput
from .metrics import component_occupancy


# ---------------- chain statistics ----------------

def batch_means_mcse(samples: np.ndarray) -> np.ndarray:
    """Monte Carlo standard error of the mean along axis 0, with sqrt(n) batches."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n < 4:
        return np.full(samples.shape[1:], np.nan)
    n_batches = int(math.floor(math.sqrt(n)))
    size = n // n_batches
    batches = samples[: n_batches * size].reshape((n_batches, size) + samples.shape[1:]).mean(axis=1)
    return batches.std(axis=0, ddof=1) / math.sqrt(n_batches)


def spectral_variance_of_mean(x: np.ndarray) -> float:
    """Variance of the sample mean from an AR(1) estimate of the spectral density at zero."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    centered = x - x.mean()
    var = float(centered @ centered) / max(n - 1, 1)
    if var == 0.0:
        return 0.0
    rho = float(centered[1:] @ centered[:-1]) / float(centered @ centered)
    rho = min(max(rho, -0.99), 0.99)
    return var / n * (1.0 + rho) / (1.0 - rho)


def geweke_z(trace: np.ndarray, first: float = 0.1, last: float = 0.5) -> float:
    """Difference of the means of the first 10% and last 50% of a trace, in standard errors."""
    trace = np.asarray(trace, dtype=float)
    n = trace.shape[0]
    n_a = int(math.floor(first * n))
    n_b = int(math.floor(last * n))
    if n_a < 2 or n_b < 2:
        return float("nan")
    a, b = trace[:n_a], trace[n - n_b:]
    var = spectral_variance_of_mean(a) + spectral_variance_of_mean(b)
    diff = float(a.mean() - b.mean())
    if var == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / math.sqrt(var)


def potential_scale_reduction(traces: Sequence[np.ndarray]) -> float:
    """Gelman-Rubin R-hat for equally long traces of one scalar across chains."""
    chains = np.asarray([np.asarray(t, dtype=float) for t in traces])
    m, n = chains.shape
    if m < 2 or n < 2:
        return float("nan")
    within = chains.var(axis=1, ddof=1).mean()
    between = n * chains.mean(axis=1).var(ddof=1)
    if within == 0.0:
        return 1.0 if between == 0.0 else float("inf")
    pooled = (n - 1) / n * within + between / n
    return float(math.sqrt(pooled / within))


# ---------------- summaries ----------------

@dataclass
class ParameterSummary:
    mean: list
    sd: list
    lo: list
    hi: list
    mcse: list


@dataclass
class ChainSummary:
    model: str
    seed: int
    n_draws: int
    parameters: Dict[str, ParameterSummary]
    accept_rates: Dict[str, float]
    geweke_z: float
    occupancy: Dict[str, int]
    r_hat: Optional[float] = None
    extra: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def summarize_draws(draws: np.ndarray) -> ParameterSummary:
    draws = np.asarray(draws, dtype=float)
    lo, hi = np.quantile(draws, [0.025, 0.975], axis=0)
    return ParameterSummary(
        mean=draws.mean(axis=0).tolist(),
        sd=draws.std(axis=0).tolist(),
        lo=np.asarray(lo).tolist(),
        hi=np.asarray(hi).tolist(),
        mcse=np.asarray(batch_means_mcse(draws)).tolist(),
    )


def summarize_chain(out: ChainOutput, others: Optional[List[ChainOutput]] = None) -> ChainSummary:
    """
    Posterior mean, SD, central 95% interval and MCSE per stored parameter, acceptance
    rates, the Geweke score of the post-burn-in log-likelihood and MAP occupancy.
    `others` are further chains of the same model, used for R-hat.
    """
    if out.n_draws < 1:
        raise DomainError("cannot summarise a chain without stored draws")
    post = out.log_lik_trace[int(out.stored_iterations[0]):]
    r_hat = None
    if others:
        start = int(out.stored_iterations[0])
        r_hat = potential_scale_reduction([out.log_lik_trace[start:]] + [o.log_lik_trace[start:] for o in others])
    return ChainSummary(
        model=out.model,
        seed=out.seed,
        n_draws=out.n_draws,
        parameters={name: summarize_draws(values) for name, values in sorted(out.draws.items())},
        accept_rates=dict(sorted(out.accept_rates.items())),
        geweke_z=geweke_z(post),
        occupancy=component_occupancy(out.map_alloc, out.component_labels),
        r_hat=r_hat,
    )
