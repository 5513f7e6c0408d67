import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "pscvx", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("pscvx")

from pscvx import fixtures as fx  # noqa: E402


@pytest.fixture(scope="session")
def specs():
    return fx.fixtures()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
