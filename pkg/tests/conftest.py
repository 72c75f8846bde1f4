import numpy as np
import pytest

import cavityvem as cv

from helpers import two_square_mesh

_MESH_CACHE = {}


def get_mesh(family, n, a=1.0, b=1.1):
    """Session-wide mesh cache so repeated tests do not regenerate geometry."""
    key = (family, n, a, b)
    if key not in _MESH_CACHE:
        _MESH_CACHE[key] = cv.generators[family](a, b, n)
    return _MESH_CACHE[key]


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture(scope="session")
def two_cells():
    return two_square_mesh()
