import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchqns.special import gamma, gamma_residue


@pytest.mark.parametrize("x", [0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 24.5, 60.0, -0.5, -1.5, -2.3, -5.5])
def test_gamma_matches_stdlib(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


def test_gamma_half_integers():
    assert gamma(-0.5) == pytest.approx(-2 * math.sqrt(math.pi), rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("n", [0, -1, -2, -7])
def test_gamma_poles_raise(n):
    with pytest.raises(ValueError):
        gamma(n)


def test_gamma_near_pole_keeps_precision():
    x = -3 + 1e-9
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-6)


def test_residue():
    assert gamma_residue(0) == 1.0
    assert gamma_residue(3) == pytest.approx(-1 / 6)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-6.0, max_value=20.0).filter(lambda v: abs(v - round(v)) > 1e-6))
def test_recurrence(x):
    assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-12)
