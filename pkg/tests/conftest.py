import numpy as np
import pytest

from czreach.czono import ConstrainedZonotope
from czreach.exprdyn import NonlinearModel
from czreach.nnet import FeedforwardNetwork, load_network
from czreach.reach import LinearModel
from helpers import SCENARIO_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_box():
    return ConstrainedZonotope.from_box([-1.0, -1.0], [1.0, 1.0])


@pytest.fixture
def di_model():
    return LinearModel([[1.0, 1.0], [0.0, 1.0]], [[0.5], [1.0]])


@pytest.fixture
def di_initial_set():
    return ConstrainedZonotope.from_box([2.5, -0.25], [3.0, 0.25])


@pytest.fixture
def di_net():
    return load_network(SCENARIO_DIR / "di_network.json")


@pytest.fixture
def duffing_model():
    return NonlinearModel.from_strings(
        ["x1 + 0.3*x2", "0.3*x1 + 0.82*x2 - 0.3*x1^3"], [[0.0], [0.3]]
    )


@pytest.fixture
def duffing_net():
    return load_network(SCENARIO_DIR / "duffing_network.json")


@pytest.fixture
def abs_net():
    """relu(x) + relu(-x) = |x|."""
    return FeedforwardNetwork([([[1.0], [-1.0]], [0.0, 0.0]), ([[1.0, 1.0]], [0.0])])


@pytest.fixture
def zero_net():
    return FeedforwardNetwork([(np.zeros((4, 2)), np.zeros(4)), (np.zeros((1, 4)), [0.0])])
