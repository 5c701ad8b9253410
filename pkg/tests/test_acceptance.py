"""
Long statistical checks of the samplers against simulated data. Deselected by
default; run with `pytest -m slow`. Iteration counts follow the bundled scenario
configs (2000 iterations, 1000 burn-in) unless noted.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from core.evaluate import batch_means_mcse, misclassification, misclassification_unstructured
from core.io.config_loader import build_model_config, build_sampler_settings, build_scenario, load_config
from core.mcmc import MamSampler, run_car_mam, run_mam, run_negbinmix
from core.mcmc.settings import AdaptiveScale, SamplerSettings
from core.model.connection import clamp_weights, connection_matrix, multiple_weights
from core.model.schemes import combined_means
from core.model.types import Dataset, Hyperparameters, ModelConfig, ParameterState
from core.simulate import simulate_car_mam, simulate_scenario

pytestmark = pytest.mark.slow


def _scenario(name, seed=None):
    cfg = load_config(name)
    sc = build_scenario(cfg)
    if seed is not None:
        sc = replace(sc, seed=seed)
    return cfg, sc


class TestGettingItRight:
    """
    Marginal-conditional vs successive-conditional simulation on a tiny additive
    model (p=20, D=1, k=2): the two samples of (mu, pi) must agree in their means.
    """
    P = 20
    N = 100_000

    def _cfg(self):
        return ModelConfig(k=2, scheme="additive", hyper=Hyperparameters(a_mu=2.0, b_mu=0.5))

    def _prior(self, rng, cfg):
        h = cfg.hyper
        return ParameterState(
            mu=rng.gamma(h.a_mu, 1.0 / h.b_mu, size=(2, 1)),
            phi=rng.uniform(h.a_phi, h.b_phi, size=(4, 1)),
            s=np.ones((self.P, 1)),
            z_star=np.zeros(self.P, dtype=np.int64),
            pi=clamp_weights(rng.uniform(size=2)),
        )

    def _data(self, rng, state, cfg):
        U = connection_matrix(2)
        z = rng.choice(4, size=self.P, p=multiple_weights(state.pi, U))
        means = combined_means(U.rows, state.mu, cfg.theta_b(1), cfg.scheme)[z]
        disp = state.phi[z]
        state.z_star = z
        return Dataset(counts=rng.negative_binomial(disp, disp / (disp + means)))

    @staticmethod
    def _summary(state):
        return np.array([state.mu[0, 0], state.mu[1, 0], state.pi[0], state.pi[1]])

    def test_moments_agree(self):
        rng = np.random.default_rng(2024)
        cfg = self._cfg()

        marginal = np.array([self._summary(self._prior(rng, cfg)) for _ in range(self.N)])

        sampler = MamSampler(cfg, SamplerSettings(n_iter=2, n_burnin=1, log_every=0))
        sampler.scales = {name: AdaptiveScale(name, sd) for name, sd in sampler.proposal_scales().items()}
        state = self._prior(rng, cfg)
        successive = np.empty((self.N, 4))
        for t in range(self.N):
            data = self._data(rng, state, cfg)
            sampler.sweep(data, state, rng)
            successive[t] = self._summary(state)

        se = np.sqrt(batch_means_mcse(successive) ** 2 + marginal.var(axis=0) / self.N)
        gap = np.abs(successive.mean(axis=0) - marginal.mean(axis=0))
        assert np.all(gap < 3.0 * se), (gap, se)


class TestGlobalActivation:
    @pytest.mark.parametrize("name", ["global_k2_low", "global_k2_medium", "global_k2_high"])
    def test_k2_error_below_five_percent(self, name):
        cfg, sc = _scenario(name)
        data = simulate_scenario(sc)
        out = run_mam(data, build_model_config(cfg), build_sampler_settings(cfg))
        assert misclassification(out.map_alloc, data.truth, connection_matrix(2)) <= 0.05

    def test_k3_gap_over_baseline(self):
        gaps = []
        for seed in range(1, 6):
            cfg, sc = _scenario("global_k3_medium", seed=seed)
            data = simulate_scenario(sc)
            settings = build_sampler_settings(cfg).with_seed(seed)
            mam = run_mam(data, build_model_config(cfg), settings)
            base = run_negbinmix(data, 8, settings, fix_first_mean=0.01)
            err_mam = misclassification(mam.map_alloc, data.truth, connection_matrix(3))
            err_base = misclassification_unstructured(base.map_alloc, data.truth, 8)
            gaps.append(err_base - err_mam)
        assert np.mean(gaps) >= 0.10


class TestSpatialOrdering:
    @pytest.mark.parametrize("name", ["reciprocal_k3", "sine_k3"])
    def test_car_mam_mam_baseline_order(self, name):
        errors = {"car-mam": [], "mam": [], "negbinmix": []}
        U = connection_matrix(3)
        for seed in range(1, 11):
            cfg, sc = _scenario(name, seed=seed)
            data = simulate_scenario(sc)
            model = build_model_config(cfg)
            settings = build_sampler_settings(cfg).with_seed(seed)
            errors["car-mam"].append(misclassification(run_car_mam(data, model, settings).map_alloc, data.truth, U))
            errors["mam"].append(misclassification(run_mam(data, model, settings).map_alloc, data.truth, U))
            base = run_negbinmix(data, 8, settings, fix_first_mean=0.01)
            errors["negbinmix"].append(misclassification_unstructured(base.map_alloc, data.truth, 8))

        mean = {k: float(np.mean(v)) for k, v in errors.items()}
        se = {k: float(np.std(v, ddof=1) / math.sqrt(len(v))) for k, v in errors.items()}
        assert mean["mam"] - mean["car-mam"] >= max(se["mam"], se["car-mam"]), mean
        assert mean["negbinmix"] - mean["mam"] >= max(se["negbinmix"], se["mam"]), mean


class TestSegmentPipeline:
    def test_four_groups_and_signal_track(self):
        cfg, sc = _scenario("chipseq_like")
        data = simulate_scenario(sc)
        out = run_car_mam(data, build_model_config(cfg), build_sampler_settings(cfg))

        assert np.all(np.bincount(out.map_alloc, minlength=4) > 0)
        track = out.weight_track
        assert np.all((track >= 0.0) & (track <= 1.0))

        signal_cluster = int(np.argmax(out.draws["mu"].mean(axis=0).mean(axis=1)))
        in_segment = np.isin(data.truth, [2, 3])
        diff = track[signal_cluster, in_segment].mean() - track[signal_cluster, ~in_segment].mean()
        assert diff > 0.3


class TestFieldRecovery:
    def test_zero_field_matches_global_model(self):
        """With no spatial structure CAR-MAM and MAM should allocate alike."""
        data = simulate_car_mam(400, 2, 2, field_kind="zero", seed=5)
        settings = SamplerSettings(n_iter=1000, n_burnin=500, seed=5, log_every=0)
        cfg = ModelConfig(k=2)
        U = connection_matrix(2)
        err_car = misclassification(run_car_mam(data, cfg, settings).map_alloc, data.truth, U)
        err_mam = misclassification(run_mam(data, cfg, settings).map_alloc, data.truth, U)
        assert abs(err_car - err_mam) < 0.05
