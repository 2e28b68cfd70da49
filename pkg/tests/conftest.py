"""
Shared fixtures for the test suite.
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis.settings import get_settings

# (eta2, eta3) -> (monotone, convex, stable) for the four k=2 reference kernels
REFERENCE_POINTS = {
    (0.8, 2.0): (False, False, False),
    (0.6, 1.5): (True, False, False),
    (0.4, 1.0): (True, False, True),
    (0.2, 0.5): (True, True, True),
}


@pytest.fixture
def reference_points():
    return REFERENCE_POINTS


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached; drop the cache around tests that patch the environment."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
