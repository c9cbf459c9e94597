from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsmaps.errors import TruncationError
from fsmaps.fock import (
    DiagonalOperator,
    FockContext,
    FockVector,
    PsiSpec,
    VevConfig,
    apply_J,
    apply_diagonal,
    connect,
    exp_J,
    maps_config,
    monotone_hurwitz,
    raising_exp_ket,
)
from fsmaps.hlaurent import HLaurent
from fsmaps.series import PSeries

CAPS: dict = {}
HMAX = 8
E = 6


def vac(energy=E):
    return FockVector.vacuum(CAPS, HMAX, energy)


def one():
    return HLaurent.const(CAPS, HMAX, 1)


def test_J_positive_kills_vacuum():
    assert apply_J(2, vac()).is_zero()


def test_J_negative_creates():
    v = apply_J(-2, vac())
    assert v.coeff((2,)) == one()


def test_commutator_on_vacuum():
    v = apply_J(2, apply_J(-2, vac()))
    assert v.coeff(()) == one() * 2


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_commutator_identity(a, b, data):
    # [J_a, J_-b] = a delta_{ab} on random small vectors
    parts = data.draw(
        st.lists(st.integers(1, 3), min_size=0, max_size=3).map(
            lambda l: tuple(sorted(l, reverse=True))
        )
    )
    if sum(parts) + a + b > 10:
        return
    v = FockVector(CAPS, HMAX, 12, {parts: one()})
    lhs = apply_J(a, apply_J(-b, v)) - apply_J(-b, apply_J(a, v))
    if a == b:
        assert lhs.coeff(parts) == one() * a
        lhs = lhs - v.scale(Fraction(a))
    assert lhs.is_zero()


def test_raising_exponential_expansion():
    # e^{J_{-2}/(2 hbar)} |0> at E=4
    w = {2: HLaurent(CAPS, HMAX, {-1: Fraction(1, 2)})}
    v = raising_exp_ket(CAPS, HMAX, 4, w)
    assert v.coeff(()) == one()
    assert v.coeff((2,)) == HLaurent(CAPS, HMAX, {-1: Fraction(1, 2)})
    assert v.coeff((2, 2)) == HLaurent(CAPS, HMAX, {-2: Fraction(1, 8)})
    assert v.coeff((4,)).is_zero()
    # matches the generic exponential applied to the vacuum
    v2 = exp_J(FockVector.vacuum(CAPS, HMAX, 4), {-2: w[2]})
    for lam in set(v.terms) | set(v2.terms):
        assert v.coeff(lam) == v2.coeff(lam)


def test_lowering_exponential_fixes_vacuum():
    w = {1: HLaurent(CAPS, HMAX, {-1: Fraction(1)})}
    v = exp_J(vac(), w)
    assert v.coeff(()) == one()
    assert len(v.terms) == 1


def test_exp_commutator_chain_coefficient():
    # <0| e^{J_2 t/(2 hbar)} e^{J_{-2}/(2 hbar)} |0>, order t^1 -> t/(2 hbar^2)
    caps = {"t": 1}
    t = PSeries.var(caps, "t2")
    ket = raising_exp_ket(caps, HMAX, 4, {2: HLaurent(caps, HMAX, {-1: Fraction(1, 2)})})
    bra = exp_J(ket, {2: HLaurent(caps, HMAX, {-1: t * Fraction(1, 2)})})
    val = bra.coeff(())
    assert val.coeff(-2).coeff_mono({"t2": 1}) == Fraction(1, 2)


def test_diagonal_on_vacuum_and_p1():
    op = DiagonalOperator(PsiSpec.maps(), CAPS, HMAX, 1)
    v = FockVector(CAPS, HMAX, E, {(): one(), (1,): one()})
    w = apply_diagonal(op, v)
    assert w.coeff(()) == one()
    assert w.coeff((1,)) == one()


def test_diagonal_on_p2():
    # D p_2 = p_2 + hbar p_1^2 for psi = log(1+y)
    op = DiagonalOperator(PsiSpec.maps(), CAPS, HMAX, 1)
    v = FockVector(CAPS, HMAX, E, {(2,): one()})
    w = apply_diagonal(op, v)
    assert w.coeff((2,)) == one()
    assert w.coeff((1, 1)) == HLaurent.mono(CAPS, HMAX, 1)


def test_diagonal_sandwich_is_identity():
    op = DiagonalOperator(PsiSpec.maps(), CAPS, HMAX, 1)
    inv = op.inverse()
    from fsmaps.partitions import partitions_of

    for n in range(6):
        for lam in partitions_of(n):
            v = FockVector(CAPS, HMAX, 6, {lam: one()})
            w = apply_diagonal(inv, apply_diagonal(op, v))
            assert w.coeff(lam) == one()
            w2 = w - v
            assert w2.is_zero()


def test_diagonal_sandwich_generic_psi():
    psi = PsiSpec.from_phi_coeffs({1: "sym", 2: "sym"}, ccap=4)
    caps = {"c": 4}
    op = DiagonalOperator(psi, caps, 5, 1)
    inv = op.inverse()
    from fsmaps.partitions import partitions_of

    for n in range(5):
        for lam in partitions_of(n):
            v = FockVector(caps, 5, 5, {lam: HLaurent.const(caps, 5, 1)})
            w = apply_diagonal(inv, apply_diagonal(op, v)) - v
            assert w.is_zero()


# -- full VEVs ---------------------------------------------------------------


@pytest.fixture(scope="module")
def ctx0():
    return FockContext(maps_config(mu_cap=6, gmax=2, nmax=3))


def test_vev_bigon(ctx0):
    assert ctx0.map_series((2,), False, 0) == PSeries.const(ctx0.cfg.caps, Fraction(1, 2))


def test_vev_odd_vanishes(ctx0):
    assert ctx0.connected((1,), False).is_zero()
    assert ctx0.connected((3,), False).is_zero()
    assert ctx0.connected((2, 1), False).is_zero()


def test_vev_torus_square(ctx0):
    assert ctx0.map_series((4,), False, 1) == PSeries.const(
        ctx0.cfg.caps, Fraction(1, 4)
    )
    # all four corners land on one vertex: not fully simple
    assert ctx0.map_series((4,), True, 1).is_zero()


def test_catalan_series(ctx0):
    w01 = ctx0.npoint_series("ordinary", 0, 1, 6)
    caps = w01.caps
    x = PSeries.var(caps, "x1")
    assert w01 == x ** 2 + 2 * x ** 4 + 5 * x ** 6


def test_fully_simple_w01_is_w_squared(ctx0):
    wv = ctx0.npoint_series("fullysimple", 0, 1, 6)
    caps = wv.caps
    assert wv == PSeries.var(caps, "w1", 2)


def test_fully_simple_w02_vanishes_at_t0(ctx0):
    assert ctx0.npoint_series("fullysimple", 0, 2, 6).is_zero()


def test_energy_guard(ctx0):
    with pytest.raises(TruncationError):
        ctx0.connected((8,), False)
    with pytest.raises(TruncationError):
        ctx0.map_coefficient(0, (4,), {4: 1}, False)


def test_truncation_error_for_hopeless_config():
    with pytest.raises(TruncationError):
        maps_config(mu_cap=8, t_degrees=(4,), t_order=99)


def test_parity_vanishing_with_t3(ctx0=None):
    cfg = maps_config(mu_cap=4, t_degrees=(3,), t_order=2, gmax=1, nmax=2)
    ctx = FockContext(cfg)
    # odd total degree: mu=(2) with one triangle -> zero
    assert ctx.map_coefficient(0, (2,), {3: 1}, False) == 0
    # even: mu=(3) with one triangle is a nonzero planar count
    assert ctx.map_coefficient(0, (3,), {3: 1}, False) != 0


def test_monotone_hurwitz_examples():
    caps: dict = {}
    assert monotone_hurwitz((1,), (1,), caps, 4) == HLaurent.const(caps, 4, 1)
    assert monotone_hurwitz((1,), (2,), caps, 4).is_zero()
    h = monotone_hurwitz((2,), (1, 1), caps, 5)
    expect = HLaurent(caps, 5, {1: Fraction(1), 3: Fraction(1), 5: Fraction(1)})
    assert h == expect


def test_hurwitz_transfer_identity():
    # FSMap^bullet_mu = sum_lambda prod(lambda)/aut * H_raw * Map^bullet_lambda
    from math import factorial

    from fsmaps.partitions import partitions_of

    cfg = maps_config(mu_cap=6, t_degrees=(3, 4), t_order=2, gmax=2, nmax=2)
    ctx = FockContext(cfg)
    hmax_h = cfg.hmax + cfg.energy // 2 + cfg.caps.get("t", 0)
    for mu in [(2,), (4,), (2, 2), (1, 3), (6,), (2, 4), (1, 1, 2)]:
        if sum(mu) > 6:
            continue
        lhs = ctx.disconnected(mu, True)
        rhs = HLaurent.zero(cfg.caps, cfg.hmax)
        for lam in partitions_of(sum(mu)):
            h = monotone_hurwitz(mu, lam, cfg.caps, hmax_h).flip_hbar()
            h = HLaurent(cfg.caps, cfg.hmax, h.coeffs)
            if h.is_zero():
                continue
            mult: dict = {}
            for p in lam:
                mult[p] = mult.get(p, 0) + 1
            aut = 1
            for m in mult.values():
                aut *= factorial(m)
            coeff = Fraction(1, aut)
            for p in lam:
                coeff *= p
            rhs = rhs + h * (ctx.disconnected(lam, False) * coeff)
        diff = lhs - rhs
        assert diff.is_zero(), (mu, diff)


def test_connect_matches_cumulant_recursion():
    cfg = maps_config(mu_cap=6, t_degrees=(4,), t_order=1, gmax=2, nmax=3)
    ctx = FockContext(cfg)
    mu = (2, 2, 2)
    values = {}
    import itertools

    for k in range(1, 4):
        for sub in itertools.combinations(range(3), k):
            values[frozenset(sub)] = ctx.normalized_moment(
                tuple(mu[i] for i in sub), False
            )
    direct = connect(values, 3)
    assert (direct - ctx.connected(mu, False)).is_zero()
