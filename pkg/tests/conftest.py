import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from rbfprune.core.model import RbfNetwork  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "integration: integration tests")
    config.addinivalue_line("markers", "unit: unit tests")
    config.addinivalue_line("markers", "performance: performance tests")
    config.addinivalue_line("markers", "slow: long-running acceptance tests")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_network(rng, num_centroids, dim, beta_scale=1.0, theta_scale=1.0):
    return RbfNetwork(
        log_gamma=rng.uniform(-1.0, 0.5),
        alpha=rng.normal(),
        beta=rng.normal(0.0, beta_scale, size=num_centroids),
        theta=rng.uniform(-theta_scale, theta_scale, size=(num_centroids, dim)),
    )


@pytest.fixture
def network_factory(rng):
    def factory(num_centroids, dim, **kwargs):
        return make_network(rng, num_centroids, dim, **kwargs)
    return factory
