import numpy as np
import pytest

from cubedswe.constants import EARTH
from cubedswe.mesh import Mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def pc():
    return EARTH


@pytest.fixture(scope="session")
def mesh_small():
    return Mesh(5, 1, EARTH.R)


@pytest.fixture(scope="session")
def mesh_6_2():
    return Mesh(6, 2, EARTH.R)


@pytest.fixture(scope="session")
def mesh_8_2():
    return Mesh(8, 2, EARTH.R)


def random_panel_points(rng, n, margin=0.0):
    x = rng.uniform(-np.pi / 4 + margin, np.pi / 4 - margin, n)
    y = rng.uniform(-np.pi / 4 + margin, np.pi / 4 - margin, n)
    return x, y
