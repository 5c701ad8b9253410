import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg, sparse

from core.errors import ConfigurationError, DomainError
from core.spatial.car import (
    SpatialConfig,
    build_precision,
    car_log_density,
    field_log_weights,
    field_to_weights,
    gamma_weights,
    logistic_weight,
    precision_for_positions,
    sample_field,
    single_site_prior_delta,
)


def _pair_precision():
    return build_precision(np.array([[0.0, 0.5], [0.5, 0.0]]))


class TestGammaWeights:
    def test_reciprocal_unit_distance(self):
        g = gamma_weights(np.array([0.0, 1.0]), SpatialConfig())
        assert g[0, 1] == pytest.approx(0.5)
        assert g[0, 0] == 0.0

    def test_coincident_positions(self):
        g = gamma_weights(np.array([3.0, 3.0]), SpatialConfig())
        assert g[0, 1] == 1.0

    def test_scale_divides_distance(self):
        g = gamma_weights(np.array([0.0, 1000.0]), SpatialConfig(scale=1000.0))
        assert g[0, 1] == pytest.approx(0.5)

    def test_truncation_is_sparse(self):
        g = gamma_weights(np.array([0.0, 1.0, 5.0]), SpatialConfig(radius=2.0))
        assert sparse.issparse(g)
        dense = g.toarray()
        assert dense[0, 1] == pytest.approx(0.5)
        assert dense[0, 2] == 0.0 and dense[1, 2] == 0.0
        np.testing.assert_allclose(dense, dense.T)

    def test_no_coupling(self):
        g = gamma_weights(np.arange(4.0), SpatialConfig(gamma_kind="none"))
        assert not np.any(g)

    @pytest.mark.parametrize("kwargs", [{"gamma_kind": "gaussian"}, {"radius": 0.0}, {"scale": -1.0}, {"eta_init": 0.0}])
    def test_bad_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            SpatialConfig(**kwargs)


class TestBuildPrecision:
    def test_pair(self):
        prec = _pair_precision()
        np.testing.assert_allclose(prec.Q, [[1.5, -0.5], [-0.5, 1.5]])
        np.testing.assert_allclose(np.sort(prec.eigs), [0.0, 1.0], atol=1e-12)
        assert prec.log_const == pytest.approx(math.log(math.sqrt(2.0) / (2.0 * math.pi)))

    def test_identity(self):
        prec = build_precision(np.zeros((5, 5)))
        np.testing.assert_allclose(prec.Q, np.eye(5))
        assert prec.log_const == pytest.approx(-2.5 * math.log(2.0 * math.pi))

    def test_asymmetric(self):
        with pytest.raises(DomainError):
            build_precision(np.array([[0.0, 0.5], [0.2, 0.0]]))

    def test_negative(self):
        with pytest.raises(DomainError):
            build_precision(np.array([[0.0, -0.5], [-0.5, 0.0]]))

    def test_sparse_matches_dense(self, rng):
        pos = np.sort(rng.uniform(0, 30, size=25))
        dense = precision_for_positions(pos, SpatialConfig(radius=1e9))
        full = precision_for_positions(pos, SpatialConfig())
        assert dense.is_sparse and not full.is_sparse
        np.testing.assert_allclose(dense.Q.toarray(), full.Q, atol=1e-12)
        assert dense.log_const == pytest.approx(full.log_const, rel=1e-10)


class TestCarLogDensity:
    def test_zero_field(self):
        prec = _pair_precision()
        assert car_log_density(np.zeros(2), prec) == prec.log_const

    def test_pair_example(self):
        prec = _pair_precision()
        x = np.array([1.0, -1.0])
        assert car_log_density(x, prec) == pytest.approx(prec.log_const - 2.0)
        assert car_log_density(x, prec, form="pairwise") == pytest.approx(prec.log_const - 2.0)

    def test_forms_agree(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 12))
            prec = precision_for_positions(rng.uniform(0, 10, size=p), SpatialConfig())
            x = rng.normal(size=p)
            assert abs(car_log_density(x, prec) - car_log_density(x, prec, form="pairwise")) < 1e-10

    def test_forms_agree_sparse(self, rng):
        prec = precision_for_positions(np.sort(rng.uniform(0, 40, size=30)), SpatialConfig(radius=3.0))
        x = rng.normal(size=30)
        assert car_log_density(x, prec) == pytest.approx(car_log_density(x, prec, form="pairwise"), abs=1e-10)

    def test_integrates_to_one(self):
        prec = _pair_precision()
        grid = np.linspace(-10.0, 10.0, 801)
        step = grid[1] - grid[0]
        a, b = np.meshgrid(grid, grid, indexing="ij")
        quad = 1.5 * a ** 2 + 1.5 * b ** 2 - a * b
        total = np.exp(prec.log_const - 0.5 * quad).sum() * step * step
        assert abs(total - 1.0) < 1e-3
        assert car_log_density(np.array([0.3, -1.2]), prec) == pytest.approx(
            prec.log_const - 0.5 * (1.5 * 0.09 + 1.5 * 1.44 + 2 * 0.5 * 0.3 * 1.2)
        )

    def test_single_site_delta(self, rng):
        prec = precision_for_positions(rng.uniform(0, 10, size=6), SpatialConfig())
        x = rng.normal(size=6)
        j, new = 3, x[3] + 0.7
        moved = x.copy()
        moved[j] = new
        expected = car_log_density(moved, prec) - car_log_density(x, prec)
        delta = single_site_prior_delta(x[j], new, j, float(prec.matvec(x)[j]), float(prec.diagonal[j]))
        assert delta == pytest.approx(expected, abs=1e-10)

    def test_wrong_length(self):
        with pytest.raises(DomainError):
            car_log_density(np.zeros(3), _pair_precision())


class TestLogistic:
    def test_zero(self):
        assert logistic_weight(0.0, 3.7) == 0.5

    def test_log_three(self):
        assert logistic_weight(math.log(3.0), 1.0) == pytest.approx(0.75)

    def test_saturation(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert logistic_weight(500.0, 1.0) == pytest.approx(1.0 - 1e-10)
            assert logistic_weight(-500.0, 1.0) == pytest.approx(1e-10)

    def test_zero_field_weights(self):
        np.testing.assert_array_equal(field_to_weights(np.zeros((3, 4)), 2.0), np.full((3, 4), 0.5))

    def test_log_weights_match(self, rng):
        x = rng.normal(scale=3.0, size=(2, 5))
        log_p, log_q = field_log_weights(x, 0.8)
        w = field_to_weights(x, 0.8)
        np.testing.assert_allclose(np.exp(log_p), w, rtol=1e-12)
        np.testing.assert_allclose(np.exp(log_q), 1.0 - w, rtol=1e-9)

    def test_bad_eta(self):
        with pytest.raises(DomainError):
            logistic_weight(1.0, 0.0)

    @given(
        x=st.floats(min_value=-50, max_value=50, allow_nan=False),
        eta=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    )
    def test_symmetry(self, x, eta):
        assert logistic_weight(x, eta) + logistic_weight(-x, eta) == pytest.approx(1.0, abs=1e-12)


class TestSampleField:
    def test_covariance(self):
        rng = np.random.default_rng(5)
        prec = precision_for_positions(np.array([0.0, 1.0, 2.5, 3.0, 6.0]), SpatialConfig())
        draws = sample_field(prec, rng, size=10_000)
        assert draws.shape == (10_000, 5)
        sigma = np.linalg.inv(prec.Q)
        emp = np.cov(draws, rowvar=False)
        se = np.sqrt((sigma ** 2 + np.outer(np.diag(sigma), np.diag(sigma))) / draws.shape[0])
        assert np.all(np.abs(emp - sigma) < 3.0 * se)

    def test_single_draw_shape(self, rng):
        assert sample_field(_pair_precision(), rng).shape == (2,)


def _random_gamma(p, seed, density):
    rng = np.random.default_rng(seed)
    g = rng.uniform(0.0, 2.0, size=(p, p)) * (rng.random((p, p)) < density)
    g = 0.5 * (g + g.T)
    np.fill_diagonal(g, 0.0)
    return g


class TestPrecisionProperties:
    @settings(max_examples=40, deadline=None)
    @given(
        p=st.integers(min_value=1, max_value=200),
        seed=st.integers(min_value=0, max_value=2 ** 31 - 1),
        density=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_random_gamma_is_spd_above_one(self, p, seed, density):
        prec = build_precision(_random_gamma(p, seed, density))
        assert np.min(linalg.eigvalsh(prec.Q)) >= 1.0 - 1e-9
        linalg.cholesky(prec.Q, lower=True)
        assert np.all(prec.eigs >= 0.0)

    @settings(max_examples=40, deadline=None)
    @given(
        pos=st.lists(st.floats(min_value=0.0, max_value=1e5), min_size=1, max_size=200),
        radius=st.sampled_from([math.inf, 1.0, 50.0]),
    )
    def test_positions_give_spd_above_one(self, pos, radius):
        prec = precision_for_positions(np.sort(pos), SpatialConfig(radius=radius, scale=1000.0))
        Q = prec.Q.toarray() if prec.is_sparse else prec.Q
        assert np.min(linalg.eigvalsh(Q)) >= 1.0 - 1e-9


class TestSingleSiteDelta:
    @settings(max_examples=200, deadline=None)
    @given(
        p=st.integers(min_value=1, max_value=12),
        seed=st.integers(min_value=0, max_value=2 ** 31 - 1),
        step=st.floats(min_value=-5.0, max_value=5.0),
    )
    def test_matches_full_density(self, p, seed, step):
        rng = np.random.default_rng(seed)
        prec = build_precision(_random_gamma(p, seed, 0.6))
        x = rng.normal(size=p)
        j = int(rng.integers(p))
        moved = x.copy()
        moved[j] += step
        expected = car_log_density(moved, prec) - car_log_density(x, prec)
        delta = single_site_prior_delta(x[j], moved[j], j, float(prec.matvec(x)[j]), float(prec.diagonal[j]))
        assert delta == pytest.approx(expected, abs=1e-9)

    def test_ten_thousand_perturbations(self):
        rng = np.random.default_rng(11)
        prec = precision_for_positions(np.sort(rng.uniform(0, 20, size=8)), SpatialConfig())
        worst = 0.0
        for _ in range(10_000):
            x = rng.normal(size=8)
            j = int(rng.integers(8))
            new = x[j] + rng.normal(scale=2.0)
            moved = x.copy()
            moved[j] = new
            expected = car_log_density(moved, prec) - car_log_density(x, prec)
            delta = single_site_prior_delta(x[j], new, j, float(prec.matvec(x)[j]), float(prec.diagonal[j]))
            worst = max(worst, abs(delta - expected))
        assert worst < 1e-9


class TestLargeFields:
    def test_unbounded_radius_refused_above_limit(self):
        pos = np.arange(5001, dtype=float)
        with pytest.raises(ConfigurationError, match="spatial.radius"):
            gamma_weights(pos, SpatialConfig())

    def test_no_coupling_above_limit_is_sparse(self):
        g = gamma_weights(np.arange(5001, dtype=float), SpatialConfig(gamma_kind="none"))
        assert sparse.issparse(g) and g.nnz == 0

    def test_finite_radius_above_limit(self):
        g = gamma_weights(np.arange(5001, dtype=float), SpatialConfig(radius=1.5))
        assert sparse.issparse(g) and g.nnz == 2 * 5000

    def test_dense_eigendecomposition_warns(self, monkeypatch, caplog):
        monkeypatch.setattr("core.spatial.car.DENSE_UNIT_LIMIT", 3)
        with caplog.at_level("WARNING", logger="core.spatial.car"):
            build_precision(_random_gamma(4, 0, 1.0))
        assert "dense eigendecomposition" in caplog.text
