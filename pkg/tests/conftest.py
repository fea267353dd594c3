import numpy as np
import pytest

from uavswarm.config import ExperimentConfig
from uavswarm.engine import make_channel
from uavswarm.geometry import LosChannel, build_ura
from uavswarm.state import Lattice, NeighborGraph, make_state


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig(output_dir="unused")


@pytest.fixture(scope="session")
def default_channel(default_config):
    return make_channel(default_config)


@pytest.fixture
def small_lattice():
    return Lattice((4, 4, 3), 5.0, (0.0, 0.0, 5.0))


@pytest.fixture(scope="session")
def small_channel():
    return LosChannel(build_ura(2, 2, 0.05), 0.01)


def random_state(rng, lattice, n, radius=np.inf):
    flat = rng.choice(lattice.size, size=n, replace=False)
    return make_state(lattice.unravel(flat), lattice, radius=radius)


def path_graph(n):
    A = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        A[i, i + 1] = A[i + 1, i] = True
    return NeighborGraph(A)
