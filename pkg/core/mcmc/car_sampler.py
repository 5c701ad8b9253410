# core/mcmc/car_sampler.py
from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from core.errors import ConfigurationError
from core.model.connection import combine_log_weights, connection_matrix
from core.model.density import component_log_likelihoods, component_means
from core.model.types import Dataset, ModelConfig, ParameterState
from core.spatial.car import (
    LOGISTIC_EPS,
    PrecisionSummary,
    SpatialConfig,
    field_log_weights,
    field_to_weights,
    precision_for_positions,
    single_site_prior_delta,
)
from .base_sampler import Moves
from .mam_sampler import MamSampler
from .settings import ChainOutput, SamplerSettings
from .updates import allocation_log_probs, sample_categorical

logger = logging.getLogger(__name__)

_LOG_FLOOR = math.log(LOGISTIC_EPS)


def _log_sigmoid(t: float) -> float:
    if t >= 0:
        value = -math.log1p(math.exp(-t))
    else:
        value = t - math.log1p(math.exp(t))
    return max(value, _LOG_FLOOR)


def _log_add(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def marginal_unit_log_lik(y_j, x_col_j, eta: float, state: ParameterState, cfg: ModelConfig) -> float:
    """log sum_h pi*_jh(x) prod_d NB(y_jd | mu*_hd, phi_hd), with z* summed out."""
    y_j = np.atleast_1d(np.asarray(y_j))
    U = connection_matrix(cfg.k)
    mu_star = component_means(state, cfg, y_j.shape[0])
    L = component_log_likelihoods(y_j[None, :], mu_star, state.phi)[0]
    log_p, log_q = field_log_weights(np.asarray(x_col_j, dtype=float), eta)
    return float(logsumexp(combine_log_weights(log_p, log_q, U) + L))


def field_marginal_log_lik(L: np.ndarray, x: np.ndarray, eta: float, cfg: ModelConfig) -> float:
    """sum_j marginal_unit_log_lik given the p x k* component log-likelihoods."""
    U = connection_matrix(cfg.k)
    log_w = combine_log_weights(*field_log_weights(x, eta), U)
    return float(logsumexp(log_w + L, axis=1).sum())


def sample_x(
    data: Dataset,
    state: ParameterState,
    prec: PrecisionSummary,
    cfg: ModelConfig,
    rng: np.random.Generator,
    proposal_sd: float,
    L: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int, int]:
    """
    Single-site random-walk Metropolis on every x_ij, cluster by cluster and unit by
    unit. With the other clusters' fields fixed, the marginal likelihood of unit j is
    log(pi_ij A_j + (1 - pi_ij) B_j), where A_j / B_j sum the components that do / do
    not include cluster i, so only the CAR prior couples the coordinates of a row.
    """
    U = connection_matrix(cfg.k)
    if L is None:
        L = component_log_likelihoods(data.counts, component_means(state, cfg, data.D), state.phi)
    x = state.x.copy()
    eta = float(state.eta)
    p = data.p
    diag = prec.diagonal.tolist()
    dense_rows = None if prec.is_sparse else prec.Q
    accepted = 0

    for i in range(cfg.k):
        log_p, log_q = field_log_weights(x, eta)
        others = np.arange(cfg.k) != i
        rows = U.rows[:, others].astype(float)
        base = (rows @ log_p[others] + (1.0 - rows) @ log_q[others]).T if others.any() else np.zeros((p, U.n_components))
        in_i = U.rows[:, i] == 1
        log_a = logsumexp(base[:, in_i] + L[:, in_i], axis=1).tolist()
        log_b = logsumexp(base[:, ~in_i] + L[:, ~in_i], axis=1).tolist()

        xi = x[i]
        qx = prec.matvec(xi).astype(float)
        steps = (proposal_sd * rng.standard_normal(p)).tolist()
        log_u = np.log(rng.random(p)).tolist()

        for j in range(p):
            x_old = float(xi[j])
            x_new = x_old + steps[j]
            t_old = x_old / eta
            t_new = x_new / eta
            ll_old = _log_add(_log_sigmoid(t_old) + log_a[j], _log_sigmoid(-t_old) + log_b[j])
            ll_new = _log_add(_log_sigmoid(t_new) + log_a[j], _log_sigmoid(-t_new) + log_b[j])
            prior = single_site_prior_delta(x_old, x_new, j, float(qx[j]), diag[j])
            if log_u[j] < ll_new - ll_old + prior:
                xi[j] = x_new
                step = x_new - x_old
                if dense_rows is not None:
                    qx += step * dense_rows[j]
                else:
                    idx, vals = prec.column(j)
                    qx[idx] += step * vals
                accepted += 1
    return x, accepted, cfg.k * p


def sample_eta(
    data: Dataset,
    state: ParameterState,
    cfg: ModelConfig,
    rng: np.random.Generator,
    proposal_sd: float,
    L: Optional[np.ndarray] = None,
) -> Tuple[float, int, int]:
    """Random walk on log eta under a uniform prior on [log eta_lo, log eta_hi]."""
    hyper = cfg.hyper
    if L is None:
        L = component_log_likelihoods(data.counts, component_means(state, cfg, data.D), state.phi)
    eta = float(state.eta)
    log_new = math.log(eta) + proposal_sd * float(rng.standard_normal())
    log_u = math.log(rng.random())
    if not math.log(hyper.eta_lo) <= log_new <= math.log(hyper.eta_hi):
        return eta, 0, 1
    eta_new = math.exp(log_new)
    diff = field_marginal_log_lik(L, state.x, eta_new, cfg) - field_marginal_log_lik(L, state.x, eta, cfg)
    if log_u < diff:
        return eta_new, 1, 1
    return eta, 0, 1


class CarMamSampler(MamSampler):
    """
    MAM with unit-specific weights pi_ij = logistic(x_ij / eta) and a CAR prior on
    each row of x. Sweep order: z* -> s -> mu -> phi -> x -> eta.
    """
    model_name = "car-mam"

    def __init__(self, cfg: ModelConfig, settings: SamplerSettings, prec: Optional[PrecisionSummary] = None):
        super().__init__(cfg, settings)
        self.spatial = cfg.spatial or SpatialConfig()
        self.prec = prec

    def validate(self, data: Dataset) -> None:
        if not data.has_positions:
            raise ConfigurationError("CAR-MAM needs unit positions; the dataset has none", key="positions")
        if self.prec is None:
            logger.info("Building CAR precision for %d units", data.p)
            self.prec = precision_for_positions(data.positions, self.spatial)
        elif self.prec.p != data.p:
            raise ConfigurationError(f"precision matrix is {self.prec.p} x {self.prec.p} for {data.p} units")

    def proposal_scales(self) -> Dict[str, float]:
        scales = super().proposal_scales()
        scales["x"] = self.settings.proposal_sd_x
        scales["eta"] = self.settings.proposal_sd_eta
        return scales

    def initial_state(self, data: Dataset, rng: np.random.Generator) -> ParameterState:
        hyper = self.cfg.hyper
        state = self._base_state(data)
        state.x = np.zeros((self.cfg.k, data.p))
        state.eta = float(min(max(self.spatial.eta_init, hyper.eta_lo), hyper.eta_hi))
        log_post, _ = allocation_log_probs(data, state, self.cfg)
        state.z_star = sample_categorical(log_post, rng)
        return state

    def _update_weights(self, data: Dataset, state: ParameterState, rng: np.random.Generator, moves: Moves) -> None:
        L = component_log_likelihoods(data.counts, component_means(state, self.cfg, data.D), state.phi)
        state.x, accepted, proposed = sample_x(data, state, self.prec, self.cfg, rng, self.scales["x"].sd, L=L)
        moves["x"] = (accepted, proposed)
        state.eta, accepted, proposed = sample_eta(data, state, self.cfg, rng, self.scales["eta"].sd, L=L)
        moves["eta"] = (accepted, proposed)

    def snapshot(self, state: ParameterState) -> Dict[str, np.ndarray]:
        return {
            "mu": state.mu,
            "phi": state.phi,
            "eta": np.array([state.eta]),
            "mu_star": component_means(state, self.cfg, state.mu.shape[1]),
        }

    def tracks(self, state: ParameterState) -> Dict[str, np.ndarray]:
        return {"weight_track": field_to_weights(state.x, state.eta), "field_mean": state.x}


def run_car_mam(
    data: Dataset,
    cfg: ModelConfig,
    settings: SamplerSettings,
    prec: Optional[PrecisionSummary] = None,
) -> ChainOutput:
    return CarMamSampler(cfg, settings, prec=prec).run(data)
