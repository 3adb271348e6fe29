import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from madrp.scenarios import ScenarioMatrix

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def centred(D):
    """ScenarioMatrix whose deviations are exactly ``D`` (columns must sum to 0)."""
    D = np.asarray(D, dtype=float)
    return ScenarioMatrix(D, np.zeros(D.shape[1]))


@pytest.fixture
def two_point():
    """Single asset with deviations {+0.02, -0.02}."""
    return ScenarioMatrix(np.array([[0.02], [-0.02]]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
