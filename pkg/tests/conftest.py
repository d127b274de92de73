import numpy as np
import pytest

from scatterkit import ScatteringConfig
from scatterkit.synthetic import generate_dataset


@pytest.fixture(scope="session")
def small_cfg():
    # cheap config reused across tests; builds once via the transform cache
    return ScatteringConfig(N=32, J=3)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinyset")
    generate_dataset(root, n_per_class=6, N=32, seed=0)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
