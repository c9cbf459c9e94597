"""Partitions, symmetric-group characters, Schur / power-sum transitions.

Characters are computed by the Murnaghan-Nakayama rule on beta-numbers
and cached; the Fock module converts between the power-sum and Schur
bases one energy level at a time.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

Partition = tuple  # weakly decreasing tuple of positive ints


@lru_cache(maxsize=None)
def partitions_of(n: int, max_part: int | None = None) -> tuple:
    """All partitions of n with parts <= max_part, descending tuples."""
    if max_part is None or max_part > n:
        max_part = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions_of(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def partitions_upto(e: int) -> list:
    out = []
    for n in range(e + 1):
        out.extend(partitions_of(n))
    return out


def zee(mu: Partition) -> int:
    """Order of the centralizer of a permutation of cycle type mu."""
    z = 1
    mult: dict = {}
    for part in mu:
        mult[part] = mult.get(part, 0) + 1
    for part, m in mult.items():
        z *= part ** m * factorial(m)
    return z


def contents(lam: Partition) -> list:
    """Multiset of box contents j - i (1-based row i, column j)."""
    return [j - i for i, row in enumerate(lam) for j in range(row)]


def hook_dim(lam: Partition) -> int:
    """Dimension of the irreducible S_n module via the hook formula."""
    n = sum(lam)
    cols = [0] * (lam[0] if lam else 0)
    for row in lam:
        for j in range(row):
            cols[j] += 1
    prod = 1
    for i, row in enumerate(lam):
        for j in range(row):
            prod *= row - j + cols[j] - i - 1
    return factorial(n) // prod


def _betas(lam: Partition) -> tuple:
    ell = len(lam)
    return tuple(sorted(lam[i] + (ell - 1 - i) for i in range(ell)))


def _lam_from_betas(betas: tuple) -> Partition:
    bs = sorted(betas, reverse=True)
    ell = len(bs)
    lam = [bs[i] - (ell - 1 - i) for i in range(ell)]
    return tuple(p for p in lam if p > 0)


@lru_cache(maxsize=None)
def mn_character(lam: Partition, mu: Partition) -> int:
    """Irreducible character chi^lam evaluated on cycle type mu."""
    if sum(lam) != sum(mu):
        return 0
    if not mu:
        return 1
    r = mu[0]
    rest = mu[1:]
    betaset = set(_betas(lam))
    total = 0
    for b in sorted(betaset):
        if b < r or (b - r) in betaset:
            continue
        height = sum(1 for x in betaset if b - r < x < b)
        nb = set(betaset)
        nb.remove(b)
        nb.add(b - r)
        total += (-1) ** height * mn_character(_lam_from_betas(tuple(sorted(nb))), rest)
    return total


def warm_character_cache(e: int):
    """Precompute the full character table for every energy level <= e."""
    for n in range(e + 1):
        for lam in partitions_of(n):
            for mu in partitions_of(n):
                mn_character(lam, mu)


def _nonzero(val) -> bool:
    if hasattr(val, "is_zero"):
        return not val.is_zero()
    return val != 0


def p_to_schur(level_coeffs: dict, n: int) -> dict:
    """p-basis dict at energy n -> Schur-basis dict (values any module)."""
    out = {}
    for lam in partitions_of(n):
        acc = None
        for mu, val in level_coeffs.items():
            chi = mn_character(lam, mu)
            if chi == 0:
                continue
            term = val * chi
            acc = term if acc is None else acc + term
        if acc is not None and _nonzero(acc):
            out[lam] = acc
    return out


def schur_to_p(level_coeffs: dict, n: int) -> dict:
    """Schur-basis dict at energy n -> p-basis dict."""
    out = {}
    for mu in partitions_of(n):
        acc = None
        zmu = zee(mu)
        for lam, val in level_coeffs.items():
            chi = mn_character(lam, mu)
            if chi == 0:
                continue
            term = val * Fraction(chi, zmu)
            acc = term if acc is None else acc + term
        if acc is not None and _nonzero(acc):
            out[mu] = acc
    return out
