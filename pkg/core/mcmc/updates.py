# core/mcmc/updates.py
"""
Full-conditional and Metropolis updates shared by the samplers.

Every update takes the current state and a numpy Generator and returns new
arrays; Metropolis updates also return (accepted, proposed) counts so the
caller can adapt proposal scales.
"""
from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from core.errors import ConfigurationError, SamplerError
from core.model.connection import ConnectionMatrix, clamp_weights, connection_matrix
from core.model.density import component_log_likelihoods, component_means, nb_log_pmf, unit_log_weights
from core.model.schemes import combined_means
from core.model.types import Dataset, Hyperparameters, ModelConfig, ParameterState

logger = logging.getLogger(__name__)

MIN_MEAN = 1e-12


# ---------------- helpers ----------------

def sample_categorical(log_probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of an (unnormalised) log-probability matrix, by inverse CDF."""
    norm = logsumexp(log_probs, axis=1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise SamplerError("every component has zero posterior weight for some unit")
    cdf = np.cumsum(np.exp(log_probs - norm), axis=1)
    u = rng.random(log_probs.shape[0])[:, None]
    idx = (cdf < u * cdf[:, -1:]).sum(axis=1)
    return np.minimum(idx, log_probs.shape[1] - 1)


def reflect(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Fold values into [lo, hi] by reflection at both bounds."""
    width = hi - lo
    t = np.mod(values - lo, 2.0 * width)
    return lo + np.where(t <= width, t, 2.0 * width - t)


def per_component_sums(z: np.ndarray, terms: np.ndarray, n_components: int) -> np.ndarray:
    out = np.zeros((n_components, terms.shape[1]))
    np.add.at(out, z, terms)
    return out


# ---------------- allocation and augmentation ----------------

def allocation_log_probs(data: Dataset, state: ParameterState, cfg: ModelConfig) -> Tuple[np.ndarray, np.ndarray]:
    """(p x k* unnormalised log posterior of z*, p x k* component log-likelihoods)."""
    mu_star = component_means(state, cfg, data.D)
    L = component_log_likelihoods(data.counts, mu_star, state.phi)
    return unit_log_weights(state, cfg, data.p) + L, L


def sample_z_star(data: Dataset, state: ParameterState, cfg: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    log_post, _ = allocation_log_probs(data, state, cfg)
    return sample_categorical(log_post, rng)


def sample_pi(z_star: np.ndarray, U: ConnectionMatrix, rng: np.random.Generator) -> np.ndarray:
    """pi_i ~ Beta(1 + m_i, 1 + p - m_i), m_i the number of units whose component includes i."""
    m = U.rows[z_star].sum(axis=0)
    p = z_star.shape[0]
    return clamp_weights(rng.beta(1.0 + m, 1.0 + p - m))


def sample_s(data: Dataset, state: ParameterState, cfg: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    """Gamma-Poisson augmentation: s_jd ~ Gamma(phi_hd + y_jd, rate = phi_hd + mu*_hd), h = z*_j."""
    mu_star = component_means(state, cfg, data.D)
    h = state.z_star
    shape = state.phi[h] + data.counts
    rate = state.phi[h] + mu_star[h]
    return rng.gamma(shape, 1.0 / rate)


# ---------------- primary means ----------------

def sample_mu_additive(data: Dataset, state: ParameterState, cfg: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Gibbs step for the additive scheme. Given s, y_jd is a superposition of
    Poisson(s_jd mu_id) subcounts over the clusters in the unit's membership;
    the subcounts are drawn multinomially and each mu_id gets its Gamma update.
    """
    if cfg.scheme != "additive":
        raise ConfigurationError(f"Gibbs update of the means needs the additive scheme, not {cfg.scheme}", key="model.scheme")
    U = connection_matrix(cfg.k)
    hyper = cfg.hyper
    rows = U.rows[state.z_star].astype(float)
    active = rows.sum(axis=1) > 0
    rows_a = rows[active]
    mu = state.mu.copy()

    for d in range(data.D):
        weights = rows_a * state.mu[:, d][None, :]
        weights /= weights.sum(axis=1, keepdims=True)
        sub = rng.multinomial(data.counts[active, d], weights) if rows_a.shape[0] else np.zeros((0, cfg.k))
        shape = hyper.a_mu + sub.sum(axis=0)
        rate = hyper.b_mu + (rows_a * state.s[active, d][:, None]).sum(axis=0)
        mu[:, d] = np.maximum(rng.gamma(shape, 1.0 / rate), MIN_MEAN)
    return mu


def _touching_log_lik(data: Dataset, mu: np.ndarray, state: ParameterState, cfg: ModelConfig, units: np.ndarray) -> np.ndarray:
    """Per-condition NB log-likelihood of the given units under primary means `mu`."""
    if not units.any():
        return np.zeros(data.D)
    U = connection_matrix(cfg.k)
    mu_star = combined_means(U.rows, mu, cfg.theta_b(data.D), cfg.scheme)
    h = state.z_star[units]
    return nb_log_pmf(data.counts[units], mu_star[h], state.phi[h]).sum(axis=0)


def sample_mu_mh(
    data: Dataset,
    state: ParameterState,
    cfg: ModelConfig,
    rng: np.random.Generator,
    proposal_sd: float,
) -> Tuple[np.ndarray, int, int]:
    """
    Log-scale random-walk Metropolis on each mu_i (all conditions at once; the
    conditions are independent given z*). Target: NB likelihood of the units whose
    component includes i, times the Gamma(a_mu, b_mu) prior, times the log Jacobian.
    """
    if cfg.scheme not in ("codominance0", "codominance1"):
        raise ConfigurationError(f"Metropolis update of the means is for co-dominance schemes, not {cfg.scheme}", key="model.scheme")
    U = connection_matrix(cfg.k)
    hyper = cfg.hyper
    mu = state.mu.copy()
    accepted = 0

    for i in range(cfg.k):
        units = np.isin(state.z_star, U.members(i))
        current = _touching_log_lik(data, mu, state, cfg, units)
        log_old = np.log(mu[i])
        log_new = log_old + proposal_sd * rng.standard_normal(data.D)
        proposal = mu.copy()
        proposal[i] = np.exp(log_new)
        proposed = _touching_log_lik(data, proposal, state, cfg, units)
        # Gamma prior on mu plus log-Jacobian: a log mu - b mu.
        prior_diff = hyper.a_mu * (log_new - log_old) - hyper.b_mu * (proposal[i] - mu[i])
        log_ratio = proposed - current + prior_diff
        accept = np.log(rng.random(data.D)) < log_ratio
        mu[i, accept] = proposal[i, accept]
        accepted += int(accept.sum())
    return mu, accepted, cfg.k * data.D


# ---------------- dispersions ----------------

def sample_phi(
    data: Dataset,
    state: ParameterState,
    cfg: ModelConfig,
    rng: np.random.Generator,
    proposal_sd: float,
    mu_star: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int, int]:
    """
    Reflected random walk on every phi_hd inside [a_phi, b_phi] under the flat prior;
    accepted against the NB likelihood of the units currently in component h.
    """
    if mu_star is None:
        mu_star = component_means(state, cfg, data.D)
    return reflected_phi_step(data.counts, state.z_star, mu_star, state.phi, cfg.hyper, rng, proposal_sd)


def reflected_phi_step(
    counts: np.ndarray,
    z: np.ndarray,
    means: np.ndarray,
    phi: np.ndarray,
    hyper: Hyperparameters,
    rng: np.random.Generator,
    proposal_sd: float,
) -> Tuple[np.ndarray, int, int]:
    n_comp = phi.shape[0]
    proposal = reflect(phi + proposal_sd * rng.standard_normal(phi.shape), hyper.a_phi, hyper.b_phi)
    current = per_component_sums(z, nb_log_pmf(counts, means[z], phi[z]), n_comp)
    proposed = per_component_sums(z, nb_log_pmf(counts, means[z], proposal[z]), n_comp)
    accept = np.log(rng.random(phi.shape)) < proposed - current
    return np.where(accept, proposal, phi), int(accept.sum()), int(accept.size)
