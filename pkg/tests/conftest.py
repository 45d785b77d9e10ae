import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from convexa.sampling import RngStream

settings.register_profile("convexa", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("convexa")


@pytest.fixture
def stream():
    return RngStream(20240607)


@pytest.fixture
def square():
    from convexa.bodies import cube
    return cube(2)


@pytest.fixture
def ellipsoid4():
    """Ellipsoid with matrix diag(16, 1, 1, 1), semiaxes (4, 1, 1, 1)."""
    from convexa.bodies import Ellipsoid
    return Ellipsoid(np.diag([16.0, 1.0, 1.0, 1.0]))


def within_sigma(value, target, err, sigma=3.0):
    return abs(value - target) <= sigma * err
