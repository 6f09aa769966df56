import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundary_vol.airy import (
    ZetaParams,
    airy_ai,
    airy_ai_prime,
    airy_integral_AI,
    scorer_gi,
    scorer_gi_prime,
    zeta,
    zeta_minus,
    zeta_plus,
)
from boundary_vol.errors import DomainError
from boundary_vol.studies import wronskian_table

mpmath.mp.dps = 30


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.mark.parametrize("x", [-20, -12.3, -5, -1, -0.25, 0, 0.3, 1.9, 2.1, 5, 7.9, 8.1, 20, 60, 150])
def test_ai_against_mpmath(x):
    assert _rel(airy_ai(x), float(mpmath.airyai(x))) <= 1e-10 or abs(airy_ai(x) - float(mpmath.airyai(x))) < 1e-14
    ref = float(mpmath.airyai(x, derivative=1))
    assert _rel(airy_ai_prime(x), ref) <= 1e-9 or abs(airy_ai_prime(x) - ref) < 1e-14


@pytest.mark.parametrize("x", [-20, -7.5, -1, 0, 0.7, 1.99, 2.01, 6, 13.9, 14.1, 30, 150])
def test_gi_against_mpmath(x):
    assert _rel(scorer_gi(x), float(mpmath.scorergi(x))) <= 1e-8
    ref = float(mpmath.diff(mpmath.scorergi, x))
    assert _rel(scorer_gi_prime(x), ref) <= 1e-7 or abs(scorer_gi_prime(x) - ref) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-20, max_value=200, allow_nan=False))
def test_random_points_against_mpmath(x):
    ai_ref = float(mpmath.airyai(x))
    assert abs(airy_ai(x) - ai_ref) <= 1e-10 * abs(ai_ref) + 1e-15
    assert _rel(scorer_gi(x), float(mpmath.scorergi(x))) <= 1e-8


def test_reference_values():
    assert airy_ai(0.0) == pytest.approx(0.355028053887817, rel=1e-14)
    assert 0 < airy_ai(10.0) < 1e-9
    assert scorer_gi(0.0) == pytest.approx(0.204975542482, rel=1e-10)
    assert math.pi * 50.0 * scorer_gi(50.0) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("x", [-4.0, -0.5, 1.0, 3.0, 9.0])
def test_defining_equations(x):
    d = 1e-3

    def second(f):
        return (f(x + d) - 2 * f(x) + f(x - d)) / d**2

    assert second(airy_ai) == pytest.approx(x * airy_ai(x), abs=1e-6)
    assert second(scorer_gi) - x * scorer_gi(x) == pytest.approx(-1 / math.pi, abs=1e-6)


def test_airy_integral_values():
    assert airy_integral_AI(0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert 0 < airy_integral_AI(10.0) < 1e-9
    assert airy_integral_AI(-20.0) == pytest.approx(float(mpmath.quad(mpmath.airyai, [-20, 0])) + 1 / 3, abs=1e-9)


@pytest.mark.parametrize("a,b", [(-3.0, -1.0), (-1.0, 2.0), (2.0, 7.0), (7.0, 15.0)])
def test_airy_integral_additivity(a, b):
    piece = float(mpmath.quad(mpmath.airyai, [a, b]))
    assert airy_integral_AI(a) - airy_integral_AI(b) == pytest.approx(piece, abs=1e-11)


def test_out_of_range_raises():
    with pytest.raises(DomainError):
        airy_ai(-21.0)
    with pytest.raises(DomainError):
        scorer_gi(250.0)
    with pytest.raises(DomainError):
        airy_integral_AI(float("nan"))


def test_wronskian_identity():
    rows = wronskian_table(50)
    assert len(rows) == 50
    assert max(r["abs_error"] for r in rows) <= 1e-6


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_zeta_branches_continuous(s, theta):
    assert zeta_minus(s, 0.0, theta) == pytest.approx(zeta_plus(s, 0.0, theta), abs=1e-9)
    d = 1e-5
    left = (zeta_minus(s, 0.0, theta) - zeta_minus(s, -d, theta)) / d
    right = (zeta_plus(s, d, theta) - zeta_plus(s, 0.0, theta)) / d
    assert left == pytest.approx(right, abs=1e-3)


def test_zeta_far_below_boundary():
    # no area accumulates, so the transform is 1/s and zeta = theta^{2/3}/s
    assert zeta(ZetaParams(s=1.0, x=-30.0, theta=1.0)) == pytest.approx(1.0, abs=1e-12)
    assert zeta(ZetaParams(s=2.0, x=-30.0, theta=8.0)) == pytest.approx(2.0, abs=1e-10)


def test_zeta_decreasing_in_level():
    vals = [zeta(ZetaParams(s=1.0, x=x, theta=1.0)) for x in np.linspace(-3, 5, 17)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)


def test_zeta_domain():
    with pytest.raises(DomainError):
        ZetaParams(s=0.0, x=0.0, theta=1.0)
    with pytest.raises(DomainError):
        ZetaParams(s=1.0, x=0.0, theta=-1.0)
