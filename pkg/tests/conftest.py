import numpy as np
import pytest

from core.mcmc.settings import SamplerSettings
from core.model.types import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def quick_settings():
    return SamplerSettings(n_iter=60, n_burnin=30, thin=1, seed=7, log_every=0)


@pytest.fixture
def two_cluster_data():
    """Well-separated k=2 additive data: outward, cluster 1, cluster 2 and the overlap."""
    rng = np.random.default_rng(3)
    truth = np.repeat([0, 1, 2, 3], 30)
    means = np.array([[0.01, 0.01], [20.0, 20.0], [60.0, 60.0], [80.0, 80.0]])
    counts = rng.negative_binomial(300.0, 300.0 / (300.0 + means[truth]))
    positions = 1000.0 * (np.arange(truth.size) + 0.5)
    return Dataset(counts=counts, positions=positions, truth=truth)
