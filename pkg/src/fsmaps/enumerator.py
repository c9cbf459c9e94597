"""Brute-force oracle: glue polygons along their sides and count.

A configuration is a fixed-point-free involution on the darts (polygon
sides).  Weighted counts divide the raw labelled count by the symmetry
group of the polygon arrangement: cyclic rotations of each distinguished
polygon, rotations and permutations of identical internal polygons.
This reproduces the inverse-automorphism weighting exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .errors import ResourceError

DEFAULT_DART_LIMIT = 12


@dataclass(frozen=True)
class PolygonSpec:
    boundary: tuple  # ordered degrees of the distinguished polygons
    internal: tuple  # sorted ((degree, count), ...)

    @classmethod
    def make(cls, boundary, internal=None) -> "PolygonSpec":
        internal = internal or {}
        items = tuple(sorted((d, m) for d, m in dict(internal).items() if m))
        if any(d < 1 for d in boundary) or any(d < 1 for d, _ in items):
            raise ValueError("polygon degrees must be >= 1")
        return cls(tuple(boundary), items)

    @property
    def darts(self) -> int:
        return sum(self.boundary) + sum(d * m for d, m in self.internal)

    @property
    def group_order(self) -> int:
        order = 1
        for mu in self.boundary:
            order *= mu
        for d, m in self.internal:
            order *= d ** m * factorial(m)
        return order

    def polygon_degrees(self) -> list:
        degs = list(self.boundary)
        for d, m in self.internal:
            degs.extend([d] * m)
        return degs


@lru_cache(maxsize=8)
def _pairings(n: int) -> tuple:
    """All fixed-point-free involutions on range(n), as tuples."""
    if n % 2:
        return ()
    out = []
    alpha = [-1] * n

    def rec(remaining):
        if not remaining:
            out.append(tuple(alpha))
            return
        i = remaining[0]
        for j in remaining[1:]:
            alpha[i], alpha[j] = j, i
            rec([d for d in remaining[1:] if d != j])
        alpha[i] = -1

    rec(list(range(n)))
    return tuple(out)


class EnumResult:
    """Raw labelled counts bucketed by (total genus, connectedness, fs)."""

    def __init__(self, spec: PolygonSpec):
        self.spec = spec
        self.all: dict = {}   # (g, connected) -> labelled count
        self.fs: dict = {}    # (g, connected) -> labelled count, fully simple

    def weighted(self, genus: int, connected: bool, fully_simple: bool) -> Fraction:
        table = self.fs if fully_simple else self.all
        if connected:
            raw = table.get((genus, True), 0)
        else:
            raw = table.get((genus, True), 0) + table.get((genus, False), 0)
        return Fraction(raw, self.spec.group_order)


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _union(parent, a, b):
    ra, rb = _find(parent, a), _find(parent, b)
    if ra != rb:
        parent[rb] = ra


def analyze_spec(spec: PolygonSpec, dart_limit: int = DEFAULT_DART_LIMIT) -> EnumResult:
    """Enumerate all gluings of the spec and bucket the counts."""
    n_darts = spec.darts
    if n_darts > dart_limit:
        raise ResourceError(f"{n_darts} darts exceeds limit {dart_limit}")
    res = EnumResult(spec)
    if n_darts % 2:
        return res
    degs = spec.polygon_degrees()
    nb = sum(spec.boundary)  # darts 0..nb-1 belong to distinguished polygons
    phi = [0] * n_darts
    poly_of = [0] * n_darts
    start = 0
    poly_starts = []
    for p, d in enumerate(degs):
        poly_starts.append(start)
        for k in range(d):
            phi[start + k] = start + (k + 1) % d
            poly_of[start + k] = p
        start += d
    npoly = len(degs)
    half = n_darts // 2

    for alpha in _pairings(n_darts):
        # connected components over polygons
        parent = list(range(npoly))
        for d in range(n_darts):
            _union(parent, poly_of[d], poly_of[alpha[d]])
        roots = {_find(parent, p) for p in range(npoly)}
        ncomp = len(roots)

        # vertices: cycles of phi o alpha
        seen = [False] * n_darts
        nvert = 0
        fully_simple = True
        for d0 in range(n_darts):
            if seen[d0]:
                continue
            nvert += 1
            incid = 0
            d = d0
            while not seen[d]:
                seen[d] = True
                if d < nb:
                    incid += 1
                d = phi[alpha[d]]
            if incid > 1:
                fully_simple = False

        chi = nvert - half + npoly
        g2 = 2 - chi
        if g2 % 2:
            continue  # cannot happen on orientable gluings
        g = g2 // 2
        key = (g, ncomp == 1)
        res.all[key] = res.all.get(key, 0) + 1
        if fully_simple:
            res.fs[key] = res.fs.get(key, 0) + 1
    return res


_ANALYSIS_CACHE: dict = {}


def _analysis(spec: PolygonSpec, dart_limit: int) -> EnumResult:
    key = spec
    if key not in _ANALYSIS_CACHE:
        _ANALYSIS_CACHE[key] = analyze_spec(spec, dart_limit)
    return _ANALYSIS_CACHE[key]


def enumerate_maps(
    spec: PolygonSpec,
    genus: int,
    connected: bool = True,
    dart_limit: int = DEFAULT_DART_LIMIT,
) -> Fraction:
    """Weighted count of ordinary gluings at the given (total) genus."""
    return _analysis(spec, dart_limit).weighted(genus, connected, False)


def enumerate_fsmaps(
    spec: PolygonSpec,
    genus: int,
    connected: bool = True,
    dart_limit: int = DEFAULT_DART_LIMIT,
) -> Fraction:
    """Weighted count of fully simple gluings at the given (total) genus."""
    return _analysis(spec, dart_limit).weighted(genus, connected, True)


def is_fully_simple(phi: list, alpha: list, n_boundary_darts: int) -> bool:
    """Fully simple predicate for an explicit dart map.

    Dart-based counting: per vertex (cycle of phi o alpha), count the
    darts belonging to distinguished polygons.  A distinguished boundary
    edge glued into a loop has both darts in one vertex cycle, so it
    counts twice there; an edge where only one side is distinguished
    counts once.  This is the unique reading under which the weighted
    counts match the fully simple VEV formula.
    """
    n = len(phi)
    seen = [False] * n
    for d0 in range(n):
        if seen[d0]:
            continue
        incid = 0
        d = d0
        while not seen[d]:
            seen[d] = True
            if d < n_boundary_darts:
                incid += 1
            d = phi[alpha[d]]
        if incid > 1:
            return False
    return True


def euler_data(phi: list, alpha: list, poly_of: list):
    """(vertices, edges, faces, components) of a dart map."""
    n = len(phi)
    seen = [False] * n
    nvert = 0
    for d0 in range(n):
        if seen[d0]:
            continue
        nvert += 1
        d = d0
        while not seen[d]:
            seen[d] = True
            d = phi[alpha[d]]
    npoly = max(poly_of) + 1 if poly_of else 0
    parent = list(range(npoly))
    for d in range(n):
        _union(parent, poly_of[d], poly_of[alpha[d]])
    ncomp = len({_find(parent, p) for p in range(npoly)})
    return nvert, n // 2, npoly, ncomp


def all_specs_up_to(max_darts: int, max_boundary: int | None = None):
    """Every polygon spec with total darts <= max_darts, n >= 1.

    Boundaries are generated as multisets (counts are symmetric in mu).
    """
    specs = []
    for total in range(1, max_darts + 1):
        for bsum in range(1, total + 1):
            for boundary in _multisets(bsum):
                rest = total - bsum
                if max_boundary is not None and len(boundary) > max_boundary:
                    continue
                for internal in _weighted_multisets(rest):
                    specs.append(PolygonSpec.make(boundary, internal))
    return specs


def _multisets(total):
    """All descending tuples of positive ints summing to total."""
    out = []

    def rec(rem, maxpart, cur):
        if rem == 0:
            out.append(tuple(cur))
            return
        for p in range(min(rem, maxpart), 0, -1):
            cur.append(p)
            rec(rem - p, p, cur)
            cur.pop()

    rec(total, total, [])
    return out


def _weighted_multisets(total):
    """All internal-face multisets {deg: count} with sum deg*count == total."""
    out = []

    def rec(rem, maxdeg, cur):
        if rem == 0:
            out.append(dict(cur))
            return
        for d in range(min(rem, maxdeg), 0, -1):
            for m in range(1, rem // d + 1):
                cur.append((d, m))
                rec(rem - d * m, d - 1, cur)
                cur.pop()

    rec(total, total, [])
    return out
