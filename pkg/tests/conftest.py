import numpy as np
import pytest

from jointmf.measures import BfbmSpec, gen_bfbm, gen_binomial_pair, path_to_measure
from jointmf.oracle import make_params
from jointmf.partition import integrate_boxes

P_X, P_Y = 0.3, 0.4


@pytest.fixture(scope="session")
def binomial_pair():
    return gen_binomial_pair(P_X, P_Y, 16)


@pytest.fixture(scope="session")
def binomial_boxes(binomial_pair):
    return integrate_boxes(*binomial_pair)


@pytest.fixture(scope="session")
def small_binomial_boxes():
    return integrate_boxes(*gen_binomial_pair(P_X, P_Y, 10))


@pytest.fixture(scope="session")
def params():
    return make_params(P_X, P_Y)


@pytest.fixture(scope="session")
def bfbm_paths():
    return gen_bfbm(BfbmSpec(0.1, 0.5, 0.5, 2**16, 7))


@pytest.fixture(scope="session")
def bfbm_boxes(bfbm_paths):
    x, y = bfbm_paths
    return integrate_boxes(path_to_measure(x), path_to_measure(y))


def brute_chi(mx, my, p, q):
    """Direct double loop over boxes, independent of the vectorized kernel."""
    total = 0.0
    for a, b in zip(mx, my):
        if a > 0 and b > 0:
            total += a ** (p / 2) * b ** (q / 2)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
