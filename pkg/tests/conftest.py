import numpy as np
import pytest

from configot.processes import UniformDensity


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def u01():
    return UniformDensity(0.0, 1.0)


@pytest.fixture
def u02():
    return UniformDensity(0.0, 2.0)
