import os

import hypothesis
import numpy as np
import pytest

from modules.circuit import FRIEDMAN_SPEC, IRIS_SPEC, TOY_SPEC, build_boston, build_layered
from modules.training import TrainingData
from utils.data_generator import gen_friedman
from utils.datasets import split

hypothesis.settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture(scope="session")
def friedman_circuit():
    return build_layered(FRIEDMAN_SPEC)


@pytest.fixture(scope="session")
def iris_circuit():
    return build_layered(IRIS_SPEC)


@pytest.fixture(scope="session")
def toy_circuit():
    return build_layered(TOY_SPEC)


@pytest.fixture(scope="session")
def boston_circuit():
    return build_boston(4, 13, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_friedman():
    """40 Friedman points split 0.5/0.25/0.25, normalized"""
    train, val, test = split(gen_friedman(40, seed=3), (0.5, 0.25, 0.25), seed=3)
    return TrainingData(train, val, test)
