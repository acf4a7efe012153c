import sys
import os

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tlsynth.core.config import BnbOptions, EncoderConfig


@pytest.fixture
def rng():
    """Fixture for a seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def bnb_options():
    """Fixture for solver options independent of the environment."""
    return BnbOptions(int_tol=1e-6, gap=1e-6, node_limit=100000, time_limit=None, rounding=False)


@pytest.fixture
def encoder_config():
    """Fixture for encoder constants independent of the environment."""
    return EncoderConfig(delta=1e-4, big_m_margin=1.0)
