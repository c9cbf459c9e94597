from fractions import Fraction

from fsmaps.partitions import (
    contents,
    hook_dim,
    mn_character,
    partitions_of,
    p_to_schur,
    schur_to_p,
    zee,
)


def test_partition_generation():
    assert partitions_of(0) == ((),)
    assert partitions_of(4) == ((4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1))
    assert len(partitions_of(10)) == 42
    assert len(partitions_of(16)) == 231


def test_zee():
    assert zee(()) == 1
    assert zee((1, 1, 1)) == 6
    assert zee((2, 1)) == 2
    assert zee((2, 2)) == 8
    assert zee((3,)) == 3


def test_contents():
    assert sorted(contents((2, 1))) == [-1, 0, 1]
    assert sorted(contents((3,))) == [0, 1, 2]
    assert contents(()) == []


def test_textbook_character_values():
    # S_3 table
    assert mn_character((3,), (1, 1, 1)) == 1
    assert mn_character((3,), (2, 1)) == 1
    assert mn_character((3,), (3,)) == 1
    assert mn_character((2, 1), (1, 1, 1)) == 2
    assert mn_character((2, 1), (2, 1)) == 0
    assert mn_character((2, 1), (3,)) == -1
    assert mn_character((1, 1, 1), (2, 1)) == -1
    # S_4 spot values
    assert mn_character((2, 2), (2, 2)) == 2
    assert mn_character((2, 2), (1, 1, 1, 1)) == 2
    assert mn_character((2, 1, 1), (4,)) == 1
    assert mn_character((1, 1, 1, 1), (2, 1, 1)) == -1


def test_trivial_and_sign_characters():
    for n in range(1, 7):
        for mu in partitions_of(n):
            assert mn_character((n,), mu) == 1
            assert mn_character(tuple([1] * n), mu) == (-1) ** (n - len(mu))


def test_dimension_matches_hook_formula():
    for n in range(1, 8):
        ones = tuple([1] * n)
        for lam in partitions_of(n):
            assert mn_character(lam, ones) == hook_dim(lam)


def test_orthogonality_rows():
    for n in range(1, 8):
        parts = partitions_of(n)
        for la in parts:
            for lb in parts:
                s = sum(
                    Fraction(mn_character(la, mu) * mn_character(lb, mu), zee(mu))
                    for mu in parts
                )
                assert s == (1 if la == lb else 0)


def test_transition_roundtrip():
    for n in range(1, 8):
        for mu in partitions_of(n):
            coeffs = {mu: Fraction(1)}
            back = schur_to_p(p_to_schur(coeffs, n), n)
            assert back == coeffs
