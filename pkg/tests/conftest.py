"""Shared fixtures for the monge test suite."""

import numpy as np
import pytest

from monge.models import SpdMatrix
from monge.services.sampler import make_rng


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-size Monte-Carlo acceptance runs')


@pytest.fixture
def rng():
    """Fresh seeded generator per test"""
    return make_rng(20240611, 'tests')


def well_conditioned_spd(rng, d: int, ridge: float = 0.5) -> SpdMatrix:
    """G·Gᵀ/d + ridge·I, condition number of order ten"""
    G = rng.standard_normal((d, d))
    return SpdMatrix(G @ G.T / d + ridge * np.eye(d))


@pytest.fixture
def spd_factory(rng):
    def make(d: int, ridge: float = 0.5) -> SpdMatrix:
        return well_conditioned_spd(rng, d, ridge)
    return make


def relative_error(actual, expected) -> float:
    actual = np.asarray(getattr(actual, 'entries', actual))
    expected = np.asarray(getattr(expected, 'entries', expected))
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), 1e-300))
