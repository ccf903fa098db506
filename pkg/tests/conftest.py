import numpy as np
import pytest

from rbflex.data import draw_minibatch, synth_images


@pytest.fixture(scope="session")
def small_images():
    return synth_images(32, 16, 16, seed=11)


@pytest.fixture(scope="session")
def minibatch8(small_images):
    return draw_minibatch(small_images, 8, seed=5)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
