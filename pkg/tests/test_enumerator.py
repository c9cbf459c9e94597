from fractions import Fraction

import pytest

from fsmaps.errors import ResourceError
from fsmaps.enumerator import (
    PolygonSpec,
    analyze_spec,
    enumerate_fsmaps,
    enumerate_maps,
    euler_data,
    is_fully_simple,
)


def test_bigon_sphere():
    assert enumerate_maps(PolygonSpec.make((2,)), 0) == Fraction(1, 2)


def test_square_torus():
    assert enumerate_maps(PolygonSpec.make((4,)), 1) == Fraction(1, 4)
    assert enumerate_maps(PolygonSpec.make((4,)), 0) == Fraction(1, 2)


def test_odd_darts_vanish():
    assert enumerate_maps(PolygonSpec.make((1,)), 0) == 0
    assert enumerate_maps(PolygonSpec.make((3,)), 0) == 0


def test_fully_simple_examples():
    assert enumerate_fsmaps(PolygonSpec.make((2,)), 0) == Fraction(1, 2)
    assert enumerate_fsmaps(PolygonSpec.make((4,)), 0) == 0
    assert enumerate_fsmaps(PolygonSpec.make((1, 1)), 0) == 0
    # mu=(2) with one internal square: nonzero planar fully simple count
    assert enumerate_fsmaps(PolygonSpec.make((2,), {4: 1}), 0) != 0


def test_is_fully_simple_predicate():
    # bigon self-glued: phi=(01), alpha=(01): two vertices, each one corner
    assert is_fully_simple([1, 0], [1, 0], 2)
    # two distinguished 1-gons glued: single vertex, loop counts twice
    assert not is_fully_simple([0, 1], [1, 0], 2)
    # distinguished 1-gon against an internal 1-gon: one corner, passes
    assert is_fully_simple([0, 1], [1, 0], 1)
    # square adjacent self-gluing: vertex with two boundary corners
    phi = [1, 2, 3, 0]
    alpha = [1, 0, 3, 2]
    assert not is_fully_simple(phi, alpha, 4)


def test_euler_data_square_torus():
    phi = [1, 2, 3, 0]
    alpha = [2, 3, 0, 1]  # opposite sides: torus
    v, e, f, c = euler_data(phi, alpha, [0, 0, 0, 0])
    assert (v, e, f, c) == (1, 2, 1, 1)
    assert v - e + f == 0  # chi = 0, genus 1


def test_genus_bound_and_parity():
    spec = PolygonSpec.make((4, 2), {2: 1})
    res = analyze_spec(spec)
    npoly = 3
    for (g, conn) in res.all:
        if conn:
            assert g >= 0  # connected surface: genuine genus
        else:
            assert g >= 1 - npoly  # each extra sphere component drops g by 1
        assert g <= spec.darts // 4


def test_count_symmetry_in_boundary_order():
    a = PolygonSpec.make((4, 2), {3: 2})
    b = PolygonSpec.make((2, 4), {3: 2})
    for g in (0, 1):
        assert enumerate_maps(a, g) == enumerate_maps(b, g)
        assert enumerate_fsmaps(a, g) == enumerate_fsmaps(b, g)


def test_dart_limit_guard():
    with pytest.raises(ResourceError):
        enumerate_maps(PolygonSpec.make((14,)), 0, dart_limit=12)


def test_weighted_count_group_order():
    spec = PolygonSpec.make((4, 2), {3: 2, 1: 1})
    assert spec.group_order == 4 * 2 * (9 * 2) * 1
    assert spec.darts == 4 + 2 + 6 + 1


def test_disconnected_includes_multi_component():
    # two bigons can close off separately: genus -1 diconnected count
    spec = PolygonSpec.make((2, 2))
    disc = enumerate_maps(spec, -1, connected=False)
    assert disc == Fraction(1, 4)  # each bigon self-glues to its own sphere
    conn = enumerate_maps(spec, 0, connected=True)
    assert conn == Fraction(1, 2)  # glued to each other along both sides
