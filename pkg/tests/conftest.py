import numpy as np
import pytest

from softgrip.mpm import Grid, MaterialParams


@pytest.fixture
def tofu():
    return MaterialParams(youngs_modulus=9000.0, poisson_ratio=0.35,
                          density=1000.0, friction_coeff=0.4)


@pytest.fixture
def lite_grid():
    return Grid((32, 32, 32), 0.005)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
