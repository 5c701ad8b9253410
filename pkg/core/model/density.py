# core/model/density.py
from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp

from core.errors import DomainError
from core.spatial.car import field_log_weights
from .connection import combine_log_weights, connection_matrix, log_multiple_weights
from .schemes import combined_means
from .types import Dataset, ModelConfig, ParameterState


def nb_log_pmf(y, mu, phi) -> np.ndarray:
    """
    Negative Binomial log-pmf with mean mu and dispersion phi (variance mu + mu^2 / phi),
    evaluated entirely through log-Gamma. Broadcasts over its arguments.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(phi))):
        raise DomainError("nb_log_pmf received a nonfinite argument")
    if np.any(mu <= 0) or np.any(phi <= 0):
        raise DomainError("nb_log_pmf needs mu > 0 and phi > 0")
    if np.any(y < 0):
        raise DomainError("nb_log_pmf needs y >= 0")

    log_total = np.log(phi + mu)
    return (
        gammaln(phi + y) - gammaln(phi) - gammaln(y + 1.0)
        - phi * np.log1p(mu / phi)
        + y * (np.log(mu) - log_total)
    )


def component_means(state: ParameterState, cfg: ModelConfig, D: int) -> np.ndarray:
    U = connection_matrix(cfg.k)
    return combined_means(U.rows, state.mu, cfg.theta_b(D), cfg.scheme)


def component_log_likelihoods(counts: np.ndarray, mu_star: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """p x k* matrix of sum_d log NB(y_jd | mu*_hd, phi_hd)."""
    counts = np.asarray(counts)
    per_condition = nb_log_pmf(counts[:, None, :], mu_star[None, :, :], phi[None, :, :])
    return per_condition.sum(axis=2)


def unit_log_likelihood(y_j, h: int, state: ParameterState, cfg: ModelConfig) -> float:
    y_j = np.atleast_1d(np.asarray(y_j))
    if not 0 <= h < cfg.n_components:
        raise DomainError(f"component index {h} outside 0..{cfg.n_components - 1}")
    mu_star = component_means(state, cfg, y_j.shape[0])
    return float(nb_log_pmf(y_j, mu_star[h], state.phi[h]).sum())


def unit_log_weights(state: ParameterState, cfg: ModelConfig, p: int) -> np.ndarray:
    """p x k* log prior weights, from the global pi or from the CAR field."""
    U = connection_matrix(cfg.k)
    if state.pi is not None:
        return np.broadcast_to(log_multiple_weights(state.pi, U), (p, U.n_components))
    if state.x is not None and state.eta is not None:
        return combine_log_weights(*field_log_weights(state.x, state.eta), U)
    raise DomainError("state carries neither global weights nor a spatial field")


def mixture_log_likelihood(data: Dataset, state: ParameterState, cfg: ModelConfig) -> float:
    if data.p < 1:
        raise DomainError("mixture log-likelihood of an empty dataset")
    mu_star = component_means(state, cfg, data.D)
    L = component_log_likelihoods(data.counts, mu_star, state.phi)
    log_w = unit_log_weights(state, cfg, data.p)
    return float(logsumexp(log_w + L, axis=1).sum())
