import numpy as np
import pytest

from rangeview.geometry import BeamModel
from rangeview.synthetic import kitti_like_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def four_beams():
    return BeamModel([0.10, -0.05, 0.20, 0.0], np.deg2rad([2.0, -3.0, -8.0, -15.0]))


@pytest.fixture(scope="session")
def kitti_model():
    return kitti_like_model(64, np.random.default_rng(7))
