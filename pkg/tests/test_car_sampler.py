import math

import numpy as np
import pytest
from scipy.special import logsumexp

from core.errors import ConfigurationError
from core.evaluate import misclassification
from core.mcmc import CarMamSampler, marginal_unit_log_lik, run_car_mam, run_mam, sample_eta, sample_x
from core.mcmc.car_sampler import field_marginal_log_lik
from core.mcmc.settings import SamplerSettings
from core.model.connection import connection_matrix
from core.model.density import component_log_likelihoods, component_means
from core.model.types import Dataset
from core.spatial.car import SpatialConfig, build_precision, precision_for_positions
from tests.helpers import make_config, make_state


def _field_state(k=2, D=1, p=4, eta=1.0, x=None):
    state = make_state(k=k, D=D, p=p, z=np.arange(p) % (2 ** k))
    state.pi = None
    state.x = np.zeros((k, p)) if x is None else np.asarray(x, dtype=float)
    state.eta = eta
    return state


class TestMarginalUnitLogLik:
    def test_zero_field_uniform_weights(self):
        cfg = make_config(k=2)
        state = _field_state()
        y = np.array([7])
        L = component_log_likelihoods(y[None, :], component_means(state, cfg, 1), state.phi)[0]
        expected = logsumexp(L) - math.log(4.0)
        assert marginal_unit_log_lik(y, np.zeros(2), 1.0, state, cfg) == pytest.approx(expected)

    def test_raising_matching_cluster_helps(self):
        cfg = make_config(k=2)
        state = _field_state()
        state.mu = np.array([[3.0], [40.0]])
        values = [marginal_unit_log_lik([40], np.array([-2.0, t]), 1.0, state, cfg) for t in np.linspace(-4, 4, 9)]
        assert np.all(np.diff(values) >= -1e-12)

    def test_field_sum(self):
        cfg = make_config(k=2)
        state = _field_state(x=[[0.3, -1.0, 2.0, 0.0], [1.0, 0.5, -0.2, 0.1]])
        counts = np.array([[0], [4], [9], [15]])
        L = component_log_likelihoods(counts, component_means(state, cfg, 1), state.phi)
        total = sum(marginal_unit_log_lik(counts[j], state.x[:, j], 1.0, state, cfg) for j in range(4))
        assert field_marginal_log_lik(L, state.x, 1.0, cfg) == pytest.approx(total)


class TestFieldUpdates:
    def test_zero_step_accepts_everything(self, rng):
        cfg = make_config(k=2)
        data = Dataset(counts=np.array([[0], [5], [10], [15]]), positions=np.arange(4.0))
        state = _field_state(x=[[0.5, -0.5, 1.0, 0.0], [0.0, 0.2, -0.3, 0.4]])
        prec = precision_for_positions(data.positions, SpatialConfig())
        x, accepted, proposed = sample_x(data, state, prec, cfg, rng, proposal_sd=0.0)
        assert accepted == proposed == 8
        np.testing.assert_array_equal(x, state.x)

    def test_sparse_precision_path(self, rng):
        cfg = make_config(k=2)
        data = Dataset(counts=np.array([[0], [5], [10], [15], [2]]), positions=np.arange(5.0))
        state = _field_state(p=5)
        prec = precision_for_positions(data.positions, SpatialConfig(radius=1.5))
        x, _, proposed = sample_x(data, state, prec, cfg, rng, proposal_sd=0.5)
        assert x.shape == (2, 5)
        assert proposed == 10

    def test_identity_precision_shrinks_to_standard_normal(self):
        """With no likelihood signal (one flat component) the x chain targets N(0, 1)."""
        rng = np.random.default_rng(8)
        cfg = make_config(k=1)
        data = Dataset(counts=np.zeros((1, 1), dtype=int), positions=np.zeros(1))
        state = _field_state(k=1, p=1)
        state.mu = np.array([[0.01]])
        prec = build_precision(np.zeros((1, 1)))
        values = []
        for _ in range(20_000):
            state.x, _, _ = sample_x(data, state, prec, cfg, rng, proposal_sd=2.0)
            values.append(state.x[0, 0])
        values = np.asarray(values)
        assert values.mean() == pytest.approx(0.0, abs=0.08)
        assert values.var() == pytest.approx(1.0, abs=0.1)

    def test_eta_zero_step(self, rng):
        cfg = make_config(k=2)
        data = Dataset(counts=np.array([[0], [5], [10], [15]]), positions=np.arange(4.0))
        state = _field_state(x=[[1.0, -1.0, 0.0, 2.0], [0.5, 0.5, 0.5, 0.5]], eta=2.0)
        eta, accepted, proposed = sample_eta(data, state, cfg, rng, proposal_sd=0.0)
        assert eta == pytest.approx(2.0)
        assert (accepted, proposed) == (1, 1)

    def test_eta_free_under_zero_field(self):
        rng = np.random.default_rng(4)
        cfg = make_config(k=2)
        data = Dataset(counts=np.array([[0], [5], [10], [15]]), positions=np.arange(4.0))
        state = _field_state(eta=1.0)
        L = component_log_likelihoods(data.counts, component_means(state, cfg, 1), state.phi)
        assert field_marginal_log_lik(L, state.x, 0.2, cfg) == pytest.approx(field_marginal_log_lik(L, state.x, 7.0, cfg))
        values = []
        for _ in range(5000):
            state.eta, _, _ = sample_eta(data, state, cfg, rng, proposal_sd=1.0, L=L)
            values.append(state.eta)
        values = np.log(values)
        assert values.min() >= math.log(0.1) and values.max() <= math.log(10.0)
        assert values.mean() == pytest.approx(0.0, abs=0.25)


class TestRunCarMam:
    def test_needs_positions(self, quick_settings):
        data = Dataset(counts=np.array([[1], [2]]))
        with pytest.raises(ConfigurationError):
            run_car_mam(data, make_config(k=2), quick_settings)

    def test_outputs(self, two_cluster_data, quick_settings):
        cfg = make_config(k=2, spatial=SpatialConfig(scale=1000.0))
        out = run_car_mam(two_cluster_data, cfg, quick_settings)
        assert out.model == "car-mam"
        assert out.weight_track.shape == (2, two_cluster_data.p)
        assert np.all((out.weight_track > 0) & (out.weight_track < 1))
        assert out.field_mean.shape == (2, two_cluster_data.p)
        assert set(out.accept_rates) == {"phi", "x", "eta"}
        assert np.all((out.draws["eta"] >= 0.1) & (out.draws["eta"] <= 10.0))

    def test_deterministic(self, two_cluster_data, quick_settings):
        cfg = make_config(k=2, spatial=SpatialConfig(scale=1000.0, radius=5.0))
        a = run_car_mam(two_cluster_data, cfg, quick_settings)
        b = run_car_mam(two_cluster_data, cfg, quick_settings)
        np.testing.assert_array_equal(a.weight_track, b.weight_track)
        np.testing.assert_array_equal(a.log_lik_trace, b.log_lik_trace)

    def test_precision_size_mismatch(self, two_cluster_data, quick_settings):
        prec = build_precision(np.zeros((3, 3)))
        with pytest.raises(ConfigurationError):
            CarMamSampler(make_config(k=2), quick_settings, prec=prec).run(two_cluster_data)

    def test_decoupled_field_matches_mam(self, two_cluster_data):
        """Without spatial coupling the per-unit weights add nothing the data cannot overrule."""
        cfg = make_config(k=2, spatial=SpatialConfig(gamma_kind="none"))
        settings = SamplerSettings(n_iter=300, n_burnin=150, seed=2, log_every=0)
        car = run_car_mam(two_cluster_data, cfg, settings)
        mam = run_mam(two_cluster_data, make_config(k=2), settings)
        np.testing.assert_allclose(car.alloc_probs.sum(axis=1), 1.0)
        U = connection_matrix(2)
        car_error = misclassification(car.map_alloc, two_cluster_data.truth, U)
        mam_error = misclassification(mam.map_alloc, two_cluster_data.truth, U)
        assert car_error < 0.1
        assert abs(car_error - mam_error) <= 0.05
