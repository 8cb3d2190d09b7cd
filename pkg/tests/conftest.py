"""Shared fixtures: the instances exercised throughout the suite."""
from fractions import Fraction as F

import pytest

from gsteiner import make_boundary


@pytest.fixture
def square_boundary():
    """Two sources on one diagonal, two sinks on the other: two matchings tie."""
    return make_boundary([
        ((0.0, 0.0), F(-1)), ((1.0, 1.0), F(-1)),
        ((1.0, 0.0), F(1)), ((0.0, 1.0), F(1)),
    ])


@pytest.fixture
def v_boundary():
    """Source of mass 2 splitting to two nearby sinks; interior branch point."""
    return make_boundary([
        ((0.0, 0.0), F(-2)), ((1.0, 0.3), F(1)), ((1.0, -0.3), F(1)),
    ])
