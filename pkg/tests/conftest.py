import numpy as np
import pytest

from epiflow.config import ExperimentConfig
from epiflow.phantom import default_scene


@pytest.fixture(scope="session")
def scene():
    return default_scene()


@pytest.fixture(scope="session")
def noiseless_config():
    return ExperimentConfig(noiseless=True)


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
