"""The generalised ordinary <-> fully simple duality.

Implements the multigraph sums with their exponentiated edge weights,
the vertex transforms (reduced form for n >= 2, full vertex-operator
form for n = 1), the implicit change of variables, and the closed
special-case formulas used as independent cross-checks.

Everything operates on truncated series; n-point data with coincident
double poles travels as a KernelSeries (numerator series plus tracked
pole orders at pairwise differences), so the intermediate kernels stay
exact and the final subtraction leaves an honest power series.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .errors import ConfigError
from .fock import PsiSpec
from .series import PSeries, divide_diff, revert_series, s_coeff, series_exp

# ---------------------------------------------------------------------------
# kernel-carrying series


class KernelSeries:
    """num / prod over pairs (a,b) of (var_a - var_b)^order."""

    __slots__ = ("num", "poles")

    def __init__(self, num: PSeries, poles: dict | None = None):
        self.num = num
        self.poles = {k: v for k, v in (poles or {}).items() if v}

    @classmethod
    def wrap(cls, s) -> "KernelSeries":
        return s if isinstance(s, KernelSeries) else cls(s)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _pair_poly(self, pair) -> PSeries:
        a, b = sorted(pair)
        caps = self.num.caps
        return PSeries.var(caps, a) - PSeries.var(caps, b)

    def _with_common_poles(self, other: "KernelSeries"):
        pairs = set(self.poles) | set(other.poles)
        n1, n2 = self.num, other.num
        out: dict = {}
        for pr in pairs:
            d1 = self.poles.get(pr, 0)
            d2 = other.poles.get(pr, 0)
            d = max(d1, d2)
            out[pr] = d
            if d > d1:
                n1 = n1 * self._pair_poly(pr) ** (d - d1)
            if d > d2:
                n2 = n2 * self._pair_poly(pr) ** (d - d2)
        return n1, n2, out

    def __add__(self, other):
        if not isinstance(other, KernelSeries):
            other = KernelSeries(self.num._lift(other))
        n1, n2, poles = self._with_common_poles(other)
        return KernelSeries(n1 + n2, poles)

    __radd__ = __add__

    def __neg__(self):
        return KernelSeries(-self.num, self.poles)

    def __sub__(self, other):
        if not isinstance(other, KernelSeries):
            other = KernelSeries(self.num._lift(other))
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, KernelSeries):
            poles = dict(self.poles)
            for pr, d in other.poles.items():
                poles[pr] = poles.get(pr, 0) + d
            return KernelSeries(self.num * other.num, poles)
        return KernelSeries(self.num * other, self.poles)

    __rmul__ = __mul__

    def euler(self, var: str) -> "KernelSeries":
        """var * d/dvar, bumping the orders of the poles involving var."""
        touching = [pr for pr in self.poles if var in pr]
        poles = dict(self.poles)
        base = self.num.euler(var)
        for pr in touching:
            base = base * self._pair_poly(pr)
        correction = PSeries.zero(self.num.caps)
        v = PSeries.var(self.num.caps, var)
        for pr in touching:
            d = self.poles[pr]
            a, b = sorted(pr)
            sign = 1 if var == a else -1
            term = self.num * Fraction(d * sign) * v
            for other in touching:
                if other != pr:
                    term = term * self._pair_poly(other)
            correction = correction + term
        for pr in touching:
            poles[pr] = poles[pr] + 1
        return KernelSeries(base - correction, poles)

    def coeff(self, var: str, k: int) -> "KernelSeries":
        return KernelSeries(self.num.coeff(var, k), self.poles)

    def shift_down(self, var: str) -> "KernelSeries":
        """Divide by var (every numerator term must carry it)."""
        terms = {}
        for mono, c in self.num.terms.items():
            d = dict(mono)
            if var not in d:
                raise ConfigError(f"shift_down: term missing {var}")
            d[var] -= 1
            if d[var] == 0:
                del d[var]
            terms[tuple(sorted(d.items()))] = c
        num = PSeries(self.num.caps)
        num.terms = terms
        return KernelSeries(num, self.poles)

    def subst_slots(
        self, mapping: dict, var_map: dict, exact_to: int | None = None
    ) -> "KernelSeries":
        """Substitute var -> series (in var_map[var]) for every slot.

        The pole pairs transform through divided differences: with
        var_a -> f(a'), (var_a - var_b) = (a' - b') DD_ab, so the
        numerator picks up DD^-order and the poles move to the new pair.
        Returns the result and consumes one order of exactness per pole
        order through the DD inversions.
        """
        num = self.num
        for var, series in mapping.items():
            num = num.subst(var, series)
        poles = {}
        for pr, d in self.poles.items():
            a, b = sorted(pr)
            na, nb = var_map[a], var_map[b]
            dd = divide_diff(mapping[a] - mapping[b], na, nb, exact_to=exact_to)
            num = num * dd.invert() ** d
            poles[frozenset((na, nb))] = d
        return KernelSeries(num, poles)

    def extract(self, exact_to: int | None = None) -> PSeries:
        """Divide out every pole factor; the result must be a series."""
        num = self.num
        used = 0
        for pr, d in sorted(self.poles.items(), key=lambda kv: sorted(kv[0])):
            a, b = sorted(pr)
            for _ in range(d):
                bound = None if exact_to is None else exact_to - used
                num = divide_diff(num, a, b, exact_to=bound)
                used += 1
        return num


def kernel_exp_minus_one(a: KernelSeries) -> KernelSeries:
    """e^a - 1 for nilpotent a (u-caps terminate the sum)."""
    acc = KernelSeries(PSeries.zero(a.num.caps))
    pw = KernelSeries(PSeries.const(a.num.caps, 1))
    k = 1
    while True:
        pw = pw * a * Fraction(1, k)
        if pw.is_zero():
            break
        acc = acc + pw
        k += 1
    return acc


# ---------------------------------------------------------------------------
# multigraphs


def gen_multigraphs(n: int, connected_only: bool = True, max_n: int = 5) -> list:
    """All multigraphs on n labelled vertices (sets of distinct nonempty
    vertex subsets), optionally restricted to connected ones.

    Connected means: the bipartite incidence graph is connected and no
    vertex is isolated (so the one-vertex graph needs its singleton
    edge, matching the convention of the graph-sum formulas).
    """
    if n > max_n:
        raise ConfigError(f"multigraph generation capped at n={max_n}")
    from itertools import chain, combinations

    verts = tuple(range(1, n + 1))
    edges = [
        frozenset(c)
        for k in range(1, n + 1)
        for c in combinations(verts, k)
    ]
    out = []
    for mask in range(1 << len(edges)):
        graph = frozenset(e for i, e in enumerate(edges) if mask >> i & 1)
        if connected_only and not _is_connected(graph, n):
            continue
        out.append(graph)
    return out


def _is_connected(graph, n: int) -> bool:
    covered = set(chain_union(graph))
    if covered != set(range(1, n + 1)):
        return False
    if n == 1:
        return True
    # union-find over vertices through edges of size >= 2
    parent = {v: v for v in range(1, n + 1)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph:
        es = sorted(e)
        for b in es[1:]:
            ra, rb = find(es[0]), find(b)
            if ra != rb:
                parent[rb] = ra
    return len({find(v) for v in range(1, n + 1)}) == 1


def chain_union(graph):
    for e in graph:
        yield from e


def core_graphs(n: int, hbar_budget: int) -> list:
    """Connected multigraphs with all edges of size >= 2, pruned by the
    minimal hbar cost 2|e| - 2 per edge.  For n = 1 the only core is
    empty (the singleton factors carry everything)."""
    if n == 1:
        return [frozenset()]
    from itertools import combinations

    verts = tuple(range(1, n + 1))
    edges = [
        frozenset(c)
        for k in range(2, n + 1)
        for c in combinations(verts, k)
    ]
    out = []
    for mask in range(1 << len(edges)):
        graph = [e for i, e in enumerate(edges) if mask >> i & 1]
        if not graph:
            continue
        cost = sum(2 * len(e) - 2 for e in graph)
        if cost > hbar_budget:
            continue
        if not _is_connected(frozenset(graph), n):
            continue
        out.append(frozenset(graph))
    return out


# ---------------------------------------------------------------------------
# the phi_m tables


class PhiProfile:
    """phi = e^psi and the shifted products phi_m used by the full
    vertex-operator transform."""

    def __init__(self, psi: PsiSpec, caps: dict, ymax: int, hmax: int):
        self.psi = psi
        self.caps = dict(caps)
        self.caps.setdefault("y", ymax)
        self.caps.setdefault("hbar", hmax)
        self.series = psi.series.truncate_to(self.caps)
        self._phim: dict = {}

    def psi_series(self) -> PSeries:
        return self.series

    def phi(self) -> PSeries:
        return series_exp(self.series)

    def phi_m(self, m: int) -> PSeries:
        """exp(sum_{i=1..m} psi(y + (2i-m-1) hbar/2)); phi_0 = 1,
        phi_{-m} = 1/phi_m."""
        if m in self._phim:
            return self._phim[m]
        if m == 0:
            out = PSeries.const(self.caps, 1)
        elif m < 0:
            out = self.phi_m(-m).invert()
        else:
            y = PSeries.var(self.caps, "y")
            h = PSeries.var(self.caps, "hbar")
            total = PSeries.zero(self.caps)
            for i in range(1, m + 1):
                shift = y + h * Fraction(2 * i - m - 1, 2)
                total = total + self.series.subst("y", shift)
            out = series_exp(total)
        self._phim[m] = out
        return out

    def phi_m_derivative(self, m: int, r: int) -> PSeries:
        """d^r/dy^r phi_m at y = 0, a series in hbar (and parameters)."""
        return self.phi_m(m).coeff("y", r) * factorial(r)


# ---------------------------------------------------------------------------
# duality frames


@dataclass
class NPointFamily:
    """Provider of source n-point series W_{g,k} in slot variables."""

    prefix: str           # "x" for ordinary sources, "w" for fully simple
    getter: object        # callable (g, k) -> PSeries in prefix1..prefixk
    cache: dict = None

    def __post_init__(self):
        if self.cache is None:
            self.cache = {}

    def get(self, g: int, k: int) -> PSeries:
        key = (g, k)
        if key not in self.cache:
            self.cache[key] = self.getter(g, k)
        return self.cache[key]


class DualityFrame:
    """One direction of the duality at fixed target (g, n).

    direction "to_fs": source = ordinary W family in X, target = W^vee
    in w (Theorem with U^vee transforms, kernel L_r(-v), factor Q).
    direction "to_ord": source = fully simple, target = ordinary
    (L_r(+v), factor Q^vee).
    """

    def __init__(
        self,
        direction: str,
        g: int,
        n: int,
        source: NPointFamily,
        psi: PsiSpec,
        mu_cap: int,
        param_caps: dict | None = None,
        pad: int | None = None,
    ):
        if direction not in ("to_fs", "to_ord"):
            raise ConfigError(f"unknown direction {direction}")
        self.direction = direction
        self.g = g
        self.n = n
        self.source = source
        self.mu_cap = mu_cap
        self.chi = 2 * g - 2 + n
        self.hcap = 2 * g - 2 + 2 * n
        self.rmax = self.chi + 1
        # padding absorbs the exactness consumed by divided-difference
        # inversions and kernel extractions at the top degrees; the
        # needed amount equals the total pole order before extraction,
        # which dualize_series learns in a cheap probe pass
        self.icap = mu_cap + (pad if pad is not None else 2 * n)
        self.src = source.prefix
        self.tgt = "w" if direction == "to_fs" else "x"
        if source.prefix != ("x" if direction == "to_fs" else "w"):
            raise ConfigError("source family prefix does not match direction")
        caps = dict(param_caps or {})
        caps[self.src] = self.icap
        caps[self.tgt] = self.icap
        caps["slot"] = self.icap
        caps["tmp"] = self.icap
        caps["hbar"] = self.hcap
        caps["y"] = self.icap
        caps["v"] = self.rmax + self.hcap + 2
        for i in range(1, n + 1):
            # the reduced form reads u-degrees up to rmax+1; the full
            # n=1 vertex form extracts [u^r x^m] with r bounded by m
            caps[f"u{i}"] = self.icap if n == 1 else self.rmax + 1
        self.caps = caps
        self.psi = psi
        self.phi = PhiProfile(psi, {k: v for k, v in caps.items()}, self.icap, self.hcap)
        self._w01 = self._fetch(0, 1, [f"{self.src}0"]).rename(f"{self.src}0", "y")
        self._l_table: dict = {}
        self._q_cache: dict = {}

    # -- source access ------------------------------------------------------

    def _fetch(self, g: int, k: int, slot_vars: list) -> PSeries:
        s = self.source.get(g, k).truncate_to(self.caps)
        for j in range(k):
            s = s.rename(f"{self.src}{j + 1}", f"tmp{j}")
        for j, v in enumerate(slot_vars):
            s = s.rename(f"tmp{j}", v)
        return s

    def w01_at(self, var: str) -> PSeries:
        return self._w01.rename("y", var)

    # -- per-vertex machinery ------------------------------------------------

    def _u_s_op(self, obj, var: str, uvar: str):
        """u hbar S(u hbar D) on KernelSeries/PSeries data, one hbar
        factored out globally (the companion hbar^{2g-2+2R} bookkeeping
        keeps all exponents nonnegative)."""
        obj = KernelSeries.wrap(obj)
        u = PSeries.var(self.caps, uvar)
        h = PSeries.var(self.caps, "hbar")
        acc = obj * u
        duk = obj
        k = 1
        while 2 * k <= min(self.caps[uvar] - 1, self.hcap):
            duk = duk.euler(var).euler(var)
            term = duk * (u ** (2 * k + 1) * h ** (2 * k) * s_coeff(k))
            if term.is_zero():
                break
            acc = acc + term
            k += 1
        return acc

    def _w_frak(self, profile: dict) -> KernelSeries:
        """frak-w for a slot profile {vertex: multiplicity}.

        Sum over g' of hbar^{2g'-2+2R} times the R-slot source function
        with the u hbar S operators applied slotwise, then the repeated
        slots merged onto their vertex variables.
        """
        slots = []
        for a, r in sorted(profile.items()):
            slots.extend([a] * r)
        big_r = len(slots)
        total = KernelSeries(PSeries.zero(self.caps))
        gp = 0
        while 2 * gp - 2 + 2 * big_r <= self.hcap:
            w = self.source.get(gp, big_r)
            if not w.is_zero():
                s = self._fetch(gp, big_r, [f"slot{j}" for j in range(big_r)])
                ks = KernelSeries(s)
                for j, a in enumerate(slots):
                    ks = self._u_s_op(ks, f"slot{j}", f"u{a}")
                num = ks.num
                for j, a in enumerate(slots):
                    num = num.rename(f"slot{j}", f"{self.src}{a}")
                ks = KernelSeries(num, ks.poles)
                h = PSeries.var(self.caps, "hbar")
                exp = 2 * gp - 2 + 2 * big_r
                total = total + ks * (h ** exp)
            gp += 1
        return total

    def _w_frak_big(self, vertices: tuple) -> KernelSeries:
        """frak-W for an edge: sum over multiplicity profiles r_a >= 1."""
        total = KernelSeries(PSeries.zero(self.caps))
        budget = self.caps[f"u{vertices[0]}"]

        def profiles(idx, current):
            if idx == len(vertices):
                yield dict(current)
                return
            a = vertices[idx]
            for r in range(1, self.caps[f"u{a}"] + 1):
                current[a] = r
                yield from profiles(idx + 1, current)
            del current[a]

        for prof in profiles(0, {}):
            cost = sum(2 * r for r in prof.values()) - 2
            if cost > self.hcap:
                continue
            term = self._w_frak(prof)
            coeff = Fraction(1)
            for r in prof.values():
                coeff /= factorial(r)
            total = total + term * coeff
        return total

    def _corr_kernel(self, i: int, j: int) -> KernelSeries:
        """hbar^2 u_i u_j S_i S_j [x_i x_j / (x_i - x_j)^2].

        The slot operators supply u_i u_j and the S corrections; the two
        base hbar factors are explicit.
        """
        vi, vj = f"{self.src}{i}", f"{self.src}{j}"
        num = PSeries.var(self.caps, vi) * PSeries.var(self.caps, vj)
        ker = KernelSeries(num, {frozenset((vi, vj)): 2})
        ker = self._u_s_op(ker, vi, f"u{i}")
        ker = self._u_s_op(ker, vj, f"u{j}")
        return ker * (PSeries.var(self.caps, "hbar") ** 2)

    def edge_exponent(self, edge: tuple) -> KernelSeries:
        """frak-W (+ corr for pairs) for an edge given as a vertex tuple."""
        out = self._w_frak_big(edge)
        if len(edge) == 2:
            out = out + self._corr_kernel(edge[0], edge[1])
        return out

    def singleton_exponent(self, a: int) -> KernelSeries:
        w = self._w_frak_big((a,))
        u = PSeries.var(self.caps, f"u{a}")
        return w - KernelSeries(u * self.w01_at(f"{self.src}{a}"))

    def graph_sum(self, trace: list | None = None) -> KernelSeries:
        """Sum over connected multigraphs of the edge-weight products.

        Factorized: (sum over >=2-edge connected cores of prod
        (e^frakW - 1)) times exp(sum of singleton exponents).
        """
        n = self.n
        singles = KernelSeries(PSeries.zero(self.caps))
        for a in range(1, n + 1):
            singles = singles + self.singleton_exponent(a)
        single_factor = kernel_exp_minus_one(singles) + 1
        if n == 1:
            return single_factor
        total = KernelSeries(PSeries.zero(self.caps))
        edge_cache: dict = {}
        for core in core_graphs(n, self.hcap):
            prod = KernelSeries(PSeries.const(self.caps, 1))
            for e in sorted(core, key=sorted):
                key = tuple(sorted(e))
                if key not in edge_cache:
                    edge_cache[key] = kernel_exp_minus_one(self.edge_exponent(key))
                prod = prod * edge_cache[key]
                if prod.is_zero():
                    break
            if prod.is_zero():
                continue
            if trace is not None:
                trace.append((sorted(map(sorted, core)), prod))
            total = total + prod
        return total * single_factor

    # -- the reduced vertex transform ----------------------------------------

    def q_factor(self, var: str) -> PSeries:
        """Q(X) = 1 + X d/dX log phi(W01(X)) on the to_fs side;
        Q^vee(w) = 1 - w d/dw log phi(W01^vee(w)) on the to_ord side."""
        if var not in self._q_cache:
            psi_at = self.psi.series.truncate_to(self.caps).subst(
                "y", self.w01_at(var)
            )
            sign = 1 if self.direction == "to_fs" else -1
            self._q_cache[var] = PSeries.const(self.caps, 1) + psi_at.euler(
                var
            ) * Fraction(sign)
        return self._q_cache[var]

    def _l_coeff(self, r: int, j: int, var: str) -> PSeries:
        """[v^j] L_r(sign*v, hbar, y) with y -> W01(source var)."""
        key = (r, j, var)
        if key in self._l_table:
            return self._l_table[key]
        base = self._l_series(r)
        c = base.coeff("v", j)
        if self.direction == "to_fs" and j % 2:
            c = -c  # L_r(-v): flip odd v coefficients
        c = c.subst("y", self.w01_at(var))
        self._l_table[key] = c
        return c

    def _l_series(self, r: int) -> PSeries:
        key = ("L", r)
        if key in self._l_table:
            return self._l_table[key]
        caps = self.caps
        psi = self.psi.series.truncate_to(caps)
        if r == 0:
            out = self._l_exponent()
        else:
            prev = self._l_series(r - 1)
            out = prev.diff("y") + PSeries.var(caps, "v") * psi.diff("y") * prev
        self._l_table[key] = out
        return out

    def _l_exponent(self) -> PSeries:
        """e^{v (S(v hbar d_y)/S(hbar d_y) - 1) psi(y)}."""
        caps = self.caps
        psi = self.psi.series.truncate_to(caps)
        # ratio S(v h d)/S(h d) = sum rho_k(v) (h d)^{2k}, rho_0 = 1
        kmax = self.hcap // 2
        v = PSeries.var(caps, "v")
        num = {k: s_coeff(k) * v ** (2 * k) for k in range(kmax + 1)}
        den = {k: PSeries.const(caps, s_coeff(k)) for k in range(kmax + 1)}
        rho = {0: PSeries.const(caps, 1)}
        for k in range(1, kmax + 1):
            acc = num[k]
            for j in range(1, k + 1):
                acc = acc - den[j] * rho[k - j]
            rho[k] = acc
        arg = PSeries.zero(caps)
        h = PSeries.var(caps, "hbar")
        deriv = psi
        for k in range(1, kmax + 1):
            deriv = deriv.diff("y").diff("y")
            arg = arg + rho[k] * h ** (2 * k) * deriv
        return series_exp(v * arg)

    def apply_reduced_vertex(self, h_obj: KernelSeries, i: int) -> KernelSeries:
        """Eq. (reduced U) at vertex i: sum over j of (Q^-1 D)^j applied
        to [v^j]L_r/Q times the u_i^(r+1) coefficient of H/S(u_i hbar)."""
        var = f"{self.src}{i}"
        uvar = f"u{i}"
        inv_s = self._inv_s_series(uvar)
        h1 = h_obj * inv_s
        q_inv = self.q_factor(var).invert()
        total = KernelSeries(PSeries.zero(self.caps))
        for r in range(0, self.caps[uvar] + 1):
            hr = h1.coeff(uvar, r + 1)
            if hr.is_zero():
                continue
            for j in range(0, self.caps["v"] + 1):
                lc = self._l_coeff(r, j, var)
                if lc.is_zero():
                    continue
                term = hr * (lc * q_inv)
                for _ in range(j):
                    term = term.euler(var) * q_inv
                total = total + term
        return total

    def _inv_s_series(self, uvar: str) -> PSeries:
        arg = PSeries.var(self.caps, uvar) * PSeries.var(self.caps, "hbar")
        sser = PSeries.const(self.caps, 1)
        pw = PSeries.const(self.caps, 1)
        k = 1
        while True:
            pw = pw * arg * arg
            if pw.is_zero():
                break
            sser = sser + pw * s_coeff(k)
            k += 1
        return sser.invert()

    # -- the full (n = 1) vertex transform ------------------------------------

    def apply_full_vertex(self, h_obj: KernelSeries) -> PSeries:
        """Eq. (full U) for the single-vertex case: returns the target
        series directly (in the target variable <tgt>1).

        U H = sum_{r,m} tgt^m (d_y^r phi_{sgn m}(0)) [u^r src^m]
              e^{u W01(src)} H / (u hbar S(u hbar)),
        with phi_{+m} toward the ordinary side and phi_{-m} toward the
        fully simple side.
        """
        if self.n != 1:
            raise ConfigError("full vertex form is the n=1 path")
        if h_obj.poles:
            raise ConfigError("n=1 data should be kernel-free")
        var = f"{self.src}1"
        uvar = "u1"
        u = PSeries.var(self.caps, uvar)
        expw = series_exp(u * self.w01_at(var))
        g = h_obj.num * expw * self._inv_s_series(uvar)
        sign = -1 if self.direction == "to_fs" else 1
        out = PSeries.zero(self.caps)
        tgt = f"{self.tgt}1"
        for m in range(1, self.mu_cap + 1):
            coeff_m = PSeries.zero(self.caps)
            for r in range(0, self.caps[uvar] + 1):
                c = g.coeff(uvar, r + 1).coeff(var, m)
                if c.is_zero():
                    continue
                coeff_m = coeff_m + c * self.phi.phi_m_derivative(sign * m, r)
            if not coeff_m.is_zero():
                out = out + coeff_m * PSeries.var(self.caps, tgt, m)
        return out

    # -- change of variables ---------------------------------------------------

    def change_series(self) -> PSeries:
        """The source variable as a series in itself defining the map to
        the target: to_fs source x: w(x) = x phi(W01(x)); to_ord source
        w: X(w) = w / phi(W01^vee(w)).  Returned in variable <src>0."""
        var = f"{self.src}0"
        phi_at = series_exp(
            self.psi.series.truncate_to(self.caps).subst("y", self.w01_at(var))
        )
        x = PSeries.var(self.caps, var)
        if self.direction == "to_fs":
            return x * phi_at
        return x * phi_at.invert()

    def target_in_source(self):
        """src_i -> series in tgt_i inverting the change of variables."""
        fwd = self.change_series()  # tgt as a function of src, in src0
        bwd = revert_series(fwd, f"{self.src}0")  # src as a function of tgt
        mapping = {}
        var_map = {}
        for i in range(1, self.n + 1):
            mapping[f"{self.src}{i}"] = bwd.rename(f"{self.src}0", f"{self.tgt}{i}")
            var_map[f"{self.src}{i}"] = f"{self.tgt}{i}"
        return mapping, var_map

    # -- assembled transform -----------------------------------------------------

    def dualize(self, trace: list | None = None) -> PSeries:
        """The target W_{g,n} (or W^vee_{g,n}) as an exact series."""
        if self.n == 1:
            h = self.graph_sum(trace)
            res = self.apply_full_vertex(h)
            # the full form already lands in the target variable
            res = res.coeff("hbar", self.chi + self.n)
            return res.truncate_to(self._out_caps())
        h = self.graph_sum(trace)
        for i in range(1, self.n + 1):
            h = self.apply_reduced_vertex(h, i)
        h = KernelSeries(h.num.coeff("hbar", self.chi + self.n), h.poles)
        mapping, var_map = self.target_in_source()
        h = h.subst_slots(mapping, var_map, exact_to=self.icap - 1)
        if (self.g, self.n) == (0, 2):
            v1, v2 = f"{self.tgt}1", f"{self.tgt}2"
            kern = KernelSeries(
                PSeries.var(self.caps, v1) * PSeries.var(self.caps, v2),
                {frozenset((v1, v2)): 2},
            )
            h = h - kern
        self.last_pole_total = sum(h.poles.values())
        self._require_budget(self.last_pole_total)
        out = h.extract(exact_to=self.icap - 2)
        return out.truncate_to(self._out_caps())

    def _require_budget(self, divisions: int):
        """Extraction consumes one exact degree per division (plus the
        divided-difference inversions); refuse to silently under-deliver."""
        if self.icap - 2 - divisions < self.mu_cap:
            raise ConfigError(
                f"padding too small: icap={self.icap}, divisions={divisions}, "
                f"needed mu_cap={self.mu_cap}"
            )

    def _out_caps(self) -> dict:
        drop = {self.src, self.tgt, "hbar", "y", "v", "slot", "tmp"} | {
            f"u{i}" for i in range(1, self.n + 1)
        }
        out = {k: v for k, v in self.caps.items() if k not in drop}
        out[self.tgt] = self.mu_cap
        return out


def closed_formula_03(frame: DualityFrame) -> PSeries:
    """The displayed (0,3) relation, independent of the multigraph sum.

    to_fs:  W03^vee = W03/(Q1 Q2 Q3)
            - sum_i (1/Q_i) D_i [ psi'(y_i) prod_{j!=i} (W02(x_i,x_j)
              + K_ij) / (Q1 Q2 Q3) ],
    and the to_ord version with Q -> Q^vee and the opposite sign.
    """
    if (frame.g, frame.n) != (0, 3):
        raise ConfigError("closed_formula_03 needs a (0,3) frame")
    caps = frame.caps
    src = frame.src
    sign = -1 if frame.direction == "to_fs" else 1
    q = {i: frame.q_factor(f"{src}{i}") for i in (1, 2, 3)}
    qinv = {i: s.invert() for i, s in q.items()}
    qall_inv = qinv[1] * qinv[2] * qinv[3]
    psi_p = frame.psi.series.truncate_to(caps).diff("y")
    w02 = {}
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i < j:
                s = frame._fetch(0, 2, [f"{src}{i}", f"{src}{j}"])
                vi, vj = f"{src}{i}", f"{src}{j}"
                k = KernelSeries(
                    PSeries.var(caps, vi) * PSeries.var(caps, vj),
                    {frozenset((vi, vj)): 2},
                )
                w02[(i, j)] = KernelSeries(s) + k
                w02[(j, i)] = w02[(i, j)]
    w03 = KernelSeries(frame._fetch(0, 3, [f"{src}1", f"{src}2", f"{src}3"]))
    total = w03 * qall_inv
    for i in (1, 2, 3):
        others = [j for j in (1, 2, 3) if j != i]
        psi_at = psi_p.subst("y", frame.w01_at(f"{src}{i}"))
        bracket = w02[(i, others[0])] * w02[(i, others[1])] * (psi_at * qall_inv)
        total = total + bracket.euler(f"{src}{i}") * (qinv[i] * Fraction(sign))
    mapping, var_map = frame.target_in_source()
    total = total.subst_slots(mapping, var_map, exact_to=frame.icap - 1)
    frame._require_budget(sum(total.poles.values()))
    out = total.extract(exact_to=frame.icap - 2)
    return out.truncate_to(frame._out_caps())


def closed_formula_11(frame: DualityFrame) -> PSeries:
    """The displayed (1,1) relation, independent of the multigraph sum.

    to_fs: W11^vee(w) = W11(X)/Q
        + Dw^2[ (1/Q)(-psi''(y)/24 DX y + psi'(y)^2/24 DX^2 y) ]
        - Dw[ (1/Q)(psi''(y)/24 DX^2 y - psi'(y)/24
               + psi'(y)/2 W02(X,X)) - psi'(y)/24 ],
    with DX = X d/dX, Dw = w d/dw = (1/Q) DX under the change; the
    to_ord version swaps the roles (signs and Q -> Q^vee).
    """
    if (frame.g, frame.n) != (1, 1):
        raise ConfigError("closed_formula_11 needs a (1,1) frame")
    caps = frame.caps
    src = frame.src
    var = f"{src}1"
    to_fs = frame.direction == "to_fs"
    q = frame.q_factor(var)
    qinv = q.invert()
    y = frame.w01_at(var)
    psi = frame.psi.series.truncate_to(caps)
    psi_p = psi.diff("y").subst("y", y)
    psi_pp = psi.diff("y").diff("y").subst("y", y)
    w11 = frame._fetch(1, 1, [var])
    w02_diag = frame._fetch(0, 2, [var, var])
    d_src = lambda s: s.euler(var)          # X d/dX on the source side
    d_tgt = lambda s: d_src(s) * qinv       # w d/dw expressed in source
    c24 = Fraction(1, 24)
    dy1 = d_src(y)
    dy2 = d_src(dy1)
    if to_fs:
        inner2 = qinv * (psi_pp * c24 * (-dy1) + psi_p * psi_p * c24 * dy2)
        inner1 = qinv * (
            psi_pp * c24 * dy2 - psi_p * c24 + psi_p * Fraction(1, 2) * w02_diag
        ) - psi_p * c24
        term2 = d_tgt(d_tgt(inner2))
        term1 = -d_tgt(inner1)
    else:
        inner2 = qinv * (psi_pp * c24 * dy1 + psi_p * psi_p * c24 * dy2)
        inner1 = qinv * (
            psi_pp * c24 * dy2 - psi_p * c24 + psi_p * Fraction(1, 2) * w02_diag
        ) - psi_p * c24
        term2 = d_tgt(d_tgt(inner2))
        term1 = d_tgt(inner1)
    total = w11 * qinv + term2 + term1
    mapping, _ = frame.target_in_source()
    out = total.subst(var, mapping[var])
    return out.truncate_to(frame._out_caps())


def dualize_series(
    direction: str,
    g: int,
    n: int,
    source: NPointFamily,
    psi: PsiSpec,
    mu_cap: int,
    param_caps: dict | None = None,
    trace: list | None = None,
) -> PSeries:
    """Two-pass graph-sum duality: a cheap probe learns the total pole
    order of the assembled sum, which fixes the degree padding needed for
    the extraction to stay exact up to mu_cap."""
    if n == 1:
        frame = DualityFrame(direction, g, n, source, psi, mu_cap, param_caps, pad=0)
        return frame.dualize(trace)
    probe_cap = min(3, mu_cap)
    probe = DualityFrame(direction, g, n, source, psi, probe_cap, param_caps, pad=2)
    try:
        probe.dualize()
    except ConfigError:
        pass  # the probe only needs to record the pole budget
    pad = getattr(probe, "last_pole_total", 2 * n) + 2
    for _ in range(6):
        frame = DualityFrame(direction, g, n, source, psi, mu_cap, param_caps, pad=pad)
        try:
            return frame.dualize(trace)
        except ConfigError:
            pad += 4  # probe underestimated (small-cap vanishing); retry
    raise ConfigError(f"dualize_series failed to stabilize padding at {pad}")


def closed_formula(
    case: str,
    direction: str,
    source: NPointFamily,
    psi: PsiSpec,
    mu_cap: int,
    param_caps: dict | None = None,
) -> PSeries:
    """Closed special-case formulas, budget-retried like dualize_series."""
    g, n = {"03": (0, 3), "11": (1, 1)}[case]
    fn = closed_formula_03 if case == "03" else closed_formula_11
    pad = 0 if n == 1 else 6
    for _ in range(6):
        frame = DualityFrame(direction, g, n, source, psi, mu_cap, param_caps, pad=pad)
        try:
            return fn(frame)
        except ConfigError:
            pad += 4
    raise ConfigError(f"closed_formula({case}) failed to stabilize padding")
