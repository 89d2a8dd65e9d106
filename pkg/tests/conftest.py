import numpy as np
import pytest

from cramerdp.io import load_bundled_mdp


@pytest.fixture(scope="session")
def single_state():
    return load_bundled_mdp("single_state")


@pytest.fixture(scope="session")
def chain3():
    return load_bundled_mdp("chain3")


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(20240601))
