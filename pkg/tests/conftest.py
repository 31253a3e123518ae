import numpy as np
import pytest

from bayesbw import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)


@pytest.fixture
def affine_data(rng):
    x = rng.uniform(size=(40, 1))
    return Dataset(y=2.0 + 3.0 * x[:, 0], x=x)


@pytest.fixture
def noisy_data(rng):
    x = rng.uniform(size=(60, 2))
    y = np.sin(2 * np.pi * x[:, 0]) + x[:, 1] + rng.normal(0, 0.3, size=60)
    return Dataset(y=y, x=x)
