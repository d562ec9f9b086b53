import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("smartcup", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("smartcup")


@pytest.fixture(scope="session")
def cfg():
    from smartcup.sim.network import CupConfig
    return CupConfig.default()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
