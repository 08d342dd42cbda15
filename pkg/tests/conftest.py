import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def mollifier():
    from gfnets.embedding import build_mollifier

    return build_mollifier()


@pytest.fixture(scope="session")
def r_grid():
    return np.linspace(-50.0, 50.0, 4001)


@pytest.fixture(scope="session")
def j_grid():
    return np.linspace(0.0, 100.0, 4001)
