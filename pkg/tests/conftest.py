import numpy as np
import pytest

from hazardvane.geometry import RigidTransform, rotation_from_axis_angle


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.normal(size=3)
    angle = rng.uniform(-np.pi, np.pi)
    return rotation_from_axis_angle(axis, angle)


def random_transform(rng: np.random.Generator, trans_scale: float = 2.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng), rng.uniform(-trans_scale, trans_scale, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
