import numpy as np
import pytest

from src.config import get_settings
from src.quantum.states import DensityMatrix, bell_pairs_state, ghz_state, random_state


@pytest.fixture(autouse=True)
def fresh_settings():
    # settings are cached per process; env changes in a test must not leak
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def mixed_rho2():
    return random_state(2, 4, seed=11)


@pytest.fixture
def mixed_rho3():
    return random_state(3, 3, seed=12)


@pytest.fixture
def bell_rho():
    return bell_pairs_state(2)


@pytest.fixture
def ghz_rho3():
    return ghz_state(3)


@pytest.fixture
def maximally_mixed():
    def build(n: int) -> DensityMatrix:
        dim = 2 ** n
        return DensityMatrix(n, np.eye(dim) / dim)
    return build


@pytest.fixture
def random_bloch_vectors(rng):
    def build(count: int):
        directions = rng.standard_normal((count, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        return directions * rng.random((count, 1))
    return build
