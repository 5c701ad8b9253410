import numpy as np
import pytest

from core.evaluate import misclassification
from core.mcmc import MamSampler, chain_seeds, run_chains, run_mam
from core.mcmc.base_sampler import initial_means
from core.mcmc.settings import AdaptiveScale, SamplerSettings
from core.errors import ConfigurationError
from core.model.connection import connection_matrix
from tests.helpers import make_config


class TestSettings:
    def test_stored_count(self):
        assert SamplerSettings(n_iter=10, n_burnin=4, thin=3).n_stored == 2

    @pytest.mark.parametrize("kwargs", [{"n_iter": 0}, {"n_burnin": 10, "n_iter": 10}, {"thin": 0}, {"proposal_sd_phi": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SamplerSettings(**kwargs)

    def test_adaptation_direction(self):
        up, down = AdaptiveScale("a", 1.0), AdaptiveScale("b", 1.0)
        for _ in range(20):
            up.update(0.9)
            down.update(0.0)
        assert up.sd > 1.0 > down.sd


class TestInitialMeans:
    def test_separated_and_increasing(self):
        counts = np.array([[0, 0], [1, 2], [1, 2], [1, 2], [50, 60]])
        mu = initial_means(counts, 3)
        assert mu.shape == (3, 2)
        assert np.all(mu[1:] >= 1.5 * mu[:-1] - 1e-12)
        assert np.all(mu >= 0.5)


class TestRunMam:
    def test_single_stored_draw(self, two_cluster_data):
        out = run_mam(two_cluster_data, make_config(k=2), SamplerSettings(n_iter=6, n_burnin=5, seed=1, log_every=0))
        assert out.n_draws == 1
        assert out.draws["mu"].shape == (1, 2, 2)
        np.testing.assert_allclose(out.alloc_probs.sum(axis=1), 1.0)

    def test_deterministic(self, two_cluster_data, quick_settings):
        a = run_mam(two_cluster_data, make_config(k=2), quick_settings)
        b = run_mam(two_cluster_data, make_config(k=2), quick_settings)
        for name in a.draws:
            np.testing.assert_array_equal(a.draws[name], b.draws[name])
        np.testing.assert_array_equal(a.alloc_probs, b.alloc_probs)
        np.testing.assert_array_equal(a.log_lik_trace, b.log_lik_trace)

    def test_outputs(self, two_cluster_data, quick_settings):
        out = run_mam(two_cluster_data, make_config(k=2), quick_settings)
        assert out.component_labels == ["00", "10", "01", "11"]
        assert set(out.draws) == {"mu", "phi", "pi", "mu_star"}
        assert out.draws["mu_star"].shape == (out.n_draws, 4, 2)
        np.testing.assert_allclose(out.draws["mu_star"][:, 0, :], 0.01)
        assert np.all((out.draws["phi"] >= 100.0) & (out.draws["phi"] <= 2000.0))
        assert out.log_lik_trace.shape == (quick_settings.n_iter,)
        assert np.array_equal(out.map_alloc, np.argmax(out.alloc_probs, axis=1))
        assert 0.0 <= out.accept_rates["phi"] <= 1.0

    def test_recovers_separated_clusters(self, two_cluster_data):
        settings = SamplerSettings(n_iter=300, n_burnin=150, seed=3, log_every=0)
        out = run_mam(two_cluster_data, make_config(k=2), settings)
        assert misclassification(out.map_alloc, two_cluster_data.truth, connection_matrix(2)) <= 0.05

    @pytest.mark.parametrize("scheme", ["codominance0", "codominance1"])
    def test_codominance_schemes(self, two_cluster_data, quick_settings, scheme):
        out = run_mam(two_cluster_data, make_config(k=2, scheme=scheme), quick_settings)
        assert "mu" in out.accept_rates
        assert np.all(out.draws["mu"] > 0)


class TestChains:
    def test_seeds(self):
        seeds = chain_seeds(9, 3)
        assert seeds[0] == 9
        assert len(set(seeds)) == 3
        assert chain_seeds(9, 3) == seeds

    def test_parallel_chains(self, two_cluster_data):
        settings = SamplerSettings(n_iter=20, n_burnin=10, seed=5, n_chains=2, log_every=0)
        outs = run_chains(MamSampler(make_config(k=2), settings), two_cluster_data)
        assert [o.seed for o in outs] == chain_seeds(5, 2)
        single = run_mam(two_cluster_data, make_config(k=2), SamplerSettings(n_iter=20, n_burnin=10, seed=5, log_every=0))
        np.testing.assert_array_equal(outs[0].log_lik_trace, single.log_lik_trace)
