import numpy as np
import pytest

from duosphere import bifurcation
from duosphere.nodal import build_catalog
from duosphere.params import yamabe_params
from duosphere.shooter import IntegratorConfig


@pytest.fixture(scope="session")
def yamabe2():
    """Critical case on S^2 x S^2 with delta = 1: p = 4, lambda = 2/3, mu = 1/3."""
    return yamabe_params(2, 1.0)


@pytest.fixture(scope="session")
def integ():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def yamabe_catalog(yamabe2, integ):
    """The k = 1..5 nodal catalog used by several suites; built once."""
    return build_catalog(yamabe2, integ, 5)


@pytest.fixture(scope="session")
def subcritical_grid():
    """Default-resolution grid for the n=2, delta=1, p=3 branch problem."""
    return bifurcation.BvpGrid(n=2, delta=1.0, p=3.0, n_intervals=400)


@pytest.fixture(scope="session")
def solutions_at_126(subcritical_grid):
    """Distinct positive solutions at lambda = 12.6, polished by shooting."""
    return bifurcation.solutions_at(12.6, subcritical_grid, 3, polish=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
