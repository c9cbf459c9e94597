from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsmaps.errors import ConfigError, NotInvertible
from fsmaps.series import (
    PSeries,
    revert_series,
    s_coeff,
    s_operator_on_monomial,
    series_exp,
    series_log,
)

CAPS = {"t": 3}


def t4(caps=CAPS):
    return PSeries.var(caps, "t4")


def test_mul_difference_of_squares():
    caps = {"t": 2}
    a = PSeries.const(caps, 1) + PSeries.var(caps, "t4")
    b = PSeries.const(caps, 1) - PSeries.var(caps, "t4")
    assert a * b == PSeries.const(caps, 1) - PSeries.var(caps, "t4", 2)


def test_mul_truncation_drops_degree_two():
    caps = {"t": 1}
    a = PSeries.const(caps, 1) + PSeries.var(caps, "t4")
    b = PSeries.const(caps, 1) - PSeries.var(caps, "t4")
    assert a * b == PSeries.const(caps, 1)


def test_mul_by_zero_annihilates():
    a = PSeries.const(CAPS, 7) + PSeries.var(CAPS, "t4", 2, Fraction(3, 5))
    assert (a * PSeries.zero(CAPS)).is_zero()


def test_invert_geometric():
    caps = {"t": 3}
    a = PSeries.const(caps, 1) + PSeries.var(caps, "t4")
    expect = (
        PSeries.const(caps, 1)
        - PSeries.var(caps, "t4")
        + PSeries.var(caps, "t4", 2)
        - PSeries.var(caps, "t4", 3)
    )
    assert a.invert() == expect
    assert a * a.invert() == 1


def test_invert_constant():
    assert PSeries.const(CAPS, 2).invert() == PSeries.const(CAPS, Fraction(1, 2))


def test_invert_no_constant_term_fails():
    with pytest.raises(NotInvertible):
        PSeries.var(CAPS, "t4").invert()


def test_cap_mismatch_is_config_error():
    with pytest.raises(ConfigError):
        PSeries.const({"t": 2}, 1) + PSeries.const({"t": 3}, 1)


def test_undeclared_group_is_config_error():
    with pytest.raises(ConfigError):
        PSeries.var({"t": 2}, "q7")


def test_revert_odd_series():
    # f = x/(1+x^2) -> g = x + x^3 + 2x^5, checked by back-substitution
    caps = {"x": 5}
    x = PSeries.var(caps, "x")
    f = x * (PSeries.const(caps, 1) + x * x).invert()
    g = revert_series(f, "x")
    assert g == x + x ** 3 + 2 * x ** 5
    assert f.subst("x", g) == x
    assert g.subst("x", f) == x


def test_revert_quadratic():
    caps = {"x": 3}
    x = PSeries.var(caps, "x")
    f = x + x * x
    g = revert_series(f, "x")
    assert g == x - x ** 2 + 2 * x ** 3
    assert f.subst("x", g) == x


def test_revert_identity():
    caps = {"x": 4}
    x = PSeries.var(caps, "x")
    assert revert_series(x, "x") == x


def test_revert_rejects_nonvanishing():
    caps = {"x": 4}
    with pytest.raises(NotInvertible):
        revert_series(PSeries.const(caps, 1) + PSeries.var(caps, "x"), "x")


def test_exp_log_roundtrip():
    caps = {"x": 5}
    x = PSeries.var(caps, "x")
    a = x + 3 * x ** 2
    assert series_log(series_exp(a)) == a


def test_diff_and_euler():
    caps = {"x": 5}
    x = PSeries.var(caps, "x")
    f = x ** 3 + 2 * x
    assert f.diff("x") == 3 * x ** 2 + 2
    assert f.euler("x") == 3 * x ** 3 + 2 * x


def test_subst_requires_zero_constant():
    caps = {"x": 4}
    x = PSeries.var(caps, "x")
    with pytest.raises(ConfigError):
        x.subst("x", PSeries.const(caps, 1) + x)


def test_json_canonical_encoding():
    caps = {"t": 2}
    s = PSeries.const(caps, Fraction(1, 2)) + PSeries.var(caps, "t4", 2, -3)
    obj = s.to_json_obj()
    assert obj == [
        {"exp": {}, "num": "1", "den": "2"},
        {"exp": {"t4": 2}, "num": "-3", "den": "1"},
    ]


# -- random ring axioms ----------------------------------------------------

VARS = ["t1", "t4", "c1"]
RCAPS = {"t": 3, "c": 2}


@st.composite
def pseries(draw):
    n_terms = draw(st.integers(0, 4))
    terms = {}
    for _ in range(n_terms):
        mono = []
        for v in draw(st.sets(st.sampled_from(VARS), max_size=2)):
            mono.append((v, draw(st.integers(1, 2))))
        coeff = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 7)))
        terms[tuple(sorted(mono))] = coeff
    return PSeries(RCAPS, terms)


@settings(max_examples=200, deadline=None)
@given(pseries(), pseries(), pseries())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@settings(max_examples=150, deadline=None)
@given(pseries(), st.integers(-9, 9), st.integers(1, 9))
def test_invert_is_two_sided(a, num, den):
    unit = a - a.constant_term + Fraction(num or 1, den)
    inv = unit.invert()
    assert unit * inv == 1
    assert inv * unit == 1


@settings(max_examples=60, deadline=None)
@given(pseries())
def test_revert_is_involutive(a):
    caps = dict(RCAPS)
    caps["x"] = 5
    x = PSeries.var(caps, "x")
    f = x + x * x * a.truncate_to(caps)
    g = revert_series(f, "x")
    assert revert_series(g, "x") == f


# -- the S-function --------------------------------------------------------


def test_s_operator_trivial_cases():
    assert s_operator_on_monomial(0, 5).is_zero()
    one = s_operator_on_monomial(1, 3)
    caps = one.caps
    expect = PSeries(
        caps,
        {
            (("hbar", 1), ("u", 1)): Fraction(1),
            (("hbar", 3), ("u", 3)): Fraction(1, 24),
        },
    )
    assert one == expect
    two = s_operator_on_monomial(2, 3)
    expect2 = PSeries(
        caps,
        {
            (("hbar", 1), ("u", 1)): Fraction(2),
            (("hbar", 3), ("u", 3)): Fraction(8, 24),
        },
    )
    assert two == expect2


def test_s_expansion_matches_brute_taylor():
    # u*hbar*k*S(u*hbar*k) == e^{uk hbar/2} - e^{-uk hbar/2}, orders <= 8
    from math import factorial

    for k in range(7):
        for order in range(9):
            got = s_operator_on_monomial(k, order)
            caps = got.caps
            brute = PSeries.zero(caps)
            j = 1
            while j <= order:
                c = (
                    Fraction(k, 2) ** j * Fraction(1, factorial(j))
                    - Fraction(-k, 2) ** j * Fraction(1, factorial(j))
                )
                if c:
                    brute = brute + PSeries(caps, {(("hbar", j), ("u", j)): c})
                j += 1
            assert got == brute, (k, order)


def test_s_coeff_values():
    assert s_coeff(0) == 1
    assert s_coeff(1) == Fraction(1, 24)
    assert s_coeff(2) == Fraction(1, 1920)
