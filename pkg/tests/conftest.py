import numpy as np
import pytest

from proxbundle.rng import stream


@pytest.fixture
def gen():
    return stream(1234, "tests")


def sample_ball(gen, center, radius, count):
    center = np.asarray(center, dtype=float)
    dirs = gen.normal(size=(count, center.size))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return center + dirs * (radius * gen.random(count))[:, None]
