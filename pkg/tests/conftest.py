import math

import numpy as np
import pytest

from src.core import RadialGrid, make_params
from src.core.profiles import random_state
from src.solvers.spectral import build_basis


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid7():
    return RadialGrid.uniform(16.0, 512, 7)


@pytest.fixture(scope="session")
def basis7(grid7):
    return build_basis(grid7)


@pytest.fixture(scope="session")
def grid3():
    """R_max = π so the continuum Dirichlet eigenvalues are k²."""
    return RadialGrid.uniform(math.pi, 1025, 3)


@pytest.fixture(scope="session")
def basis3(grid3):
    return build_basis(grid3)


@pytest.fixture
def params73():
    return make_params(7, 3)


@pytest.fixture
def state7(grid7, rng):
    return random_state(grid7, rng, 0.5, 4.0)
