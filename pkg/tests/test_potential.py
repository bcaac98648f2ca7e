import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betalab.errors import DomainError, ParseError
from betalab.potential import (GAUSSIAN, AffineMap, Polynomial, PotentialFamily, check_growth,
                               eval_potential, interpolate, parse_potential, rescale_to_standard)

QUARTIC = Polynomial([0, 0, 0, 0, 0.25])

coef = st.floats(-3, 3, allow_nan=False)


def test_eval_examples():
    assert eval_potential(GAUSSIAN, 2.0) == 2.0
    assert eval_potential(GAUSSIAN, 1j) == pytest.approx(-0.5)
    assert eval_potential(QUARTIC, 1.0, 1) == 1.0


def test_eval_real_stays_real():
    out = eval_potential(QUARTIC, np.linspace(-1, 1, 5))
    assert out.dtype == float


def test_eval_second_derivative_and_beyond_degree():
    assert eval_potential(QUARTIC, 2.0, 2) == pytest.approx(12.0)
    assert eval_potential(GAUSSIAN, 3.0, 5) == 0.0
    with pytest.raises(DomainError):
        eval_potential(GAUSSIAN, 1.0, -1)


def test_interpolate_examples():
    fam = PotentialFamily(QUARTIC)
    assert interpolate(fam, 0.0) == GAUSSIAN
    assert interpolate(fam, 1.0) == QUARTIC
    assert eval_potential(interpolate(fam, 0.5), 1.0) == pytest.approx(0.375)
    for t in (-0.1, 1.1):
        with pytest.raises(DomainError):
            interpolate(fam, t)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(-5, 5), st.lists(coef, min_size=1, max_size=7))
def test_interpolation_is_linear(t, x, cs):
    V = Polynomial(cs + [1.0])
    Vt = interpolate(PotentialFamily(V), t)
    want = t * eval_potential(V, x) + (1 - t) * eval_potential(GAUSSIAN, x)
    assert eval_potential(Vt, x) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_rescale_examples():
    p, amap = rescale_to_standard(GAUSSIAN, -2, 2)
    assert amap.is_identity and p == GAUSSIAN
    p, amap = rescale_to_standard(Polynomial([2.0, -2.0, 0.5]), 0, 4)
    assert (amap.shift, amap.scale) == (2.0, 1.0)
    assert np.allclose(p.coeffs, [0, 0, 0.5])
    assert AffineMap.from_interval(-4, 4).scale == 0.5
    with pytest.raises(DomainError):
        rescale_to_standard(GAUSSIAN, 1, 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=2, max_size=6), st.floats(-3, 3), st.floats(0.1, 5))
def test_rescale_roundtrip(cs, a, width):
    V = Polynomial(cs + [1.0])
    b = a + width
    W, amap = rescale_to_standard(V, a, b)
    lam = np.random.default_rng(0).uniform(a - 1, b + 1, 100)
    x = amap.forward(lam)
    assert np.allclose(amap.inverse(x), lam, rtol=1e-12, atol=1e-12)
    ref = eval_potential(V, lam)
    assert np.allclose(eval_potential(W, x), ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


def test_affine_maps_interval_onto_standard():
    amap = AffineMap.from_interval(-1.3, 0.7)
    assert np.allclose(amap.forward([-1.3, 0.7]), [-2, 2])
    with pytest.raises(DomainError):
        AffineMap(0.0, -1.0)


def test_growth_examples():
    assert check_growth(GAUSSIAN)
    neg = check_growth(Polynomial([0, 0, -1]))
    assert not neg and "negative leading" in neg.witness
    odd = check_growth(Polynomial([0, 1]))
    assert not odd and "-inf" in odd.witness


def test_parse_potential():
    assert parse_potential("0 0 0.5") == GAUSSIAN
    assert parse_potential([0, 0, 0.5]) == GAUSSIAN
    for bad in ("0 0 abc", [], [0, True], "x"):
        with pytest.raises(ParseError):
            parse_potential(bad)


def test_polynomial_arithmetic_and_symmetry():
    assert (QUARTIC + GAUSSIAN).degree == 4
    assert (QUARTIC - QUARTIC).degree == 0
    assert QUARTIC.is_even() and not Polynomial([0, 0.1, 0.5]).is_even()
    assert QUARTIC.m == 2
    assert QUARTIC.derivative() == Polynomial([0, 0, 0, 1.0])
