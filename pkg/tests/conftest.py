import numpy as np
import pytest

from src.modules import degrade


@pytest.fixture
def rng():
    return np.random.default_rng(20161)


@pytest.fixture(scope="session")
def shapes64():
    return degrade.make_shapes_fixture(64, 64)


@pytest.fixture(scope="session")
def stripe64():
    return degrade.make_stripe_fixture(64, 64, "straight:8")
