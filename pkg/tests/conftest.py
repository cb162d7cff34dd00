import numpy as np
import pytest

from stochreach import WeightedNorm, pendulum, pendulum_hull

# Reference constants for the stabilized-pendulum benchmark: the weight
# matrix certifying rate -0.5 on the Jacobian hull, printed to two decimals.
PEND_P = np.array([[35.68, 2.21], [2.21, 1.27]])
PEND_CP = -0.5
PEND_SIGMA = np.array([[0.0], [0.1]])


@pytest.fixture(scope="session")
def pend_norm():
    return WeightedNorm(PEND_P)


@pytest.fixture(scope="session")
def pend_hull():
    return pendulum_hull()


@pytest.fixture(scope="session")
def pend_system():
    return pendulum()
