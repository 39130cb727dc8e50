"""Shared fixtures; puts the flat strategic/ script folder on sys.path."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "strategic"))

from core_types import L2Cost, WeightedL1Cost, as_vector  # noqa: E402
from streams import StreamSpec, generate_separable_stream, generated_meta  # noqa: E402


@pytest.fixture
def vec():
    """Shorthand for building read-only float64 vectors."""
    return lambda *coords: as_vector(coords)


@pytest.fixture
def l2_half():
    return L2Cost(0.5)


@pytest.fixture
def l1_unit():
    return WeightedL1Cost((1.0, 1.0))


@pytest.fixture
def small_spec():
    return StreamSpec(d=3, R=5.0, gamma=0.5, length=300, seed=11)


@pytest.fixture
def small_stream(small_spec):
    return generate_separable_stream(small_spec), generated_meta(small_spec)


@pytest.fixture
def nonnegative_spec():
    return StreamSpec(d=3, R=5.0, gamma=0.5, length=300, seed=12, coordinate_sign_constraint=True)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
