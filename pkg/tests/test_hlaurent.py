from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsmaps.errors import ConfigError
from fsmaps.hlaurent import HLaurent, hl_exp
from fsmaps.series import PSeries

CAPS = {"t": 2}
HMAX = 6


def mono(k, val=1):
    return HLaurent.mono(CAPS, HMAX, k, val)


def test_product_truncates_above_window():
    a = mono(4)
    b = mono(3)
    assert (a * b).is_zero()
    assert a * mono(2) == mono(6)


def test_negative_exponents_multiply():
    a = mono(-2, Fraction(1, 2))
    b = mono(3, 4)
    assert a * b == mono(1, 2)


def test_flip_hbar():
    a = mono(1) + mono(2, 5) + mono(-1, 3)
    assert a.flip_hbar() == mono(1, -1) + mono(2, 5) + mono(-1, -3)
    assert a.flip_hbar().flip_hbar() == a


def test_invert_unit():
    a = mono(0) + mono(1)  # 1 + hbar
    inv = a.invert()
    assert a * inv == mono(0)
    expect = HLaurent(CAPS, HMAX, {k: Fraction((-1) ** k) for k in range(HMAX + 1)})
    assert inv == expect


def test_invert_refuses_positive_valuation():
    with pytest.raises(ConfigError):
        mono(1).invert()


def test_hl_exp_terminates():
    a = mono(1, Fraction(1, 2))
    e = hl_exp(a)
    assert e.coeff(0) == PSeries.const(CAPS, 1)
    assert e.coeff(2) == PSeries.const(CAPS, Fraction(1, 8))
    with pytest.raises(ConfigError):
        hl_exp(mono(0))


def test_scalar_and_pseries_multipliers():
    a = mono(2)
    assert a * Fraction(3, 2) == mono(2, Fraction(3, 2))
    t = PSeries.var(CAPS, "t4")
    assert (a * t).coeff(2) == t


@st.composite
def hlaurents(draw):
    coeffs = {}
    for _ in range(draw(st.integers(0, 4))):
        k = draw(st.integers(-3, HMAX))
        coeffs[k] = PSeries.const(
            CAPS, Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 5)))
        )
    return HLaurent(CAPS, HMAX, coeffs)


@settings(max_examples=150, deadline=None)
@given(hlaurents(), hlaurents(), hlaurents())
def test_ring_axioms_within_window(a, b, c):
    assert a + b == b + a
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    # associativity can only be asserted when no truncation interferes;
    # restrict to nonnegative supports well inside the window
    an = HLaurent(CAPS, HMAX, {k: s for k, s in a.coeffs.items() if 0 <= k <= 2})
    bn = HLaurent(CAPS, HMAX, {k: s for k, s in b.coeffs.items() if 0 <= k <= 2})
    cn = HLaurent(CAPS, HMAX, {k: s for k, s in c.coeffs.items() if 0 <= k <= 2})
    assert (an * bn) * cn == an * (bn * cn)
