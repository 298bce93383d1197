import pytest

from poissongittins.levy import LevyModel, RewardSpec
from support import SQRT2


@pytest.fixture
def bm0():
    """Driftless Brownian motion with psi(t) = t^2."""
    return LevyModel.brownian(0.0, SQRT2)


@pytest.fixture
def cl():
    return LevyModel.cramer_lundberg(2.0, 1.0, 1.0)


@pytest.fixture
def bmj():
    return LevyModel.brownian_exp_jumps(1.0, 1.0, 1.0, 2.0)


@pytest.fixture
def linear():
    return RewardSpec.affine(0.0, 1.0)
