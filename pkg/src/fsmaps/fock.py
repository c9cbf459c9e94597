"""Bosonic Fock space pipeline: the ground truth for every count.

Vacuum expectation values are evaluated right to left: build the ket
from the raising exponential, sandwich the diagonal operator(s), apply
the lowering exponential, then pair against the boundary insertions.
Everything is exact; energy truncation makes each step finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .errors import ConfigError, TruncationError
from .hlaurent import HLaurent, hl_exp
from .partitions import (
    Partition,
    mn_character,
    partitions_of,
    p_to_schur,
    schur_to_p,
    warm_character_cache,
    zee,
)
from .series import PSeries

# ---------------------------------------------------------------------------
# psi profiles


class PsiSpec:
    """A deformation profile psi(y) with psi(0)=0.

    Stored as a PSeries in variable ``y`` over its own small ring; the
    Fock side only ever needs psi evaluated on contents y = c*hbar.
    """

    def __init__(self, series: PSeries, name: str):
        if series.constant_term != 0:
            raise ConfigError("psi(0) must vanish")
        self.series = series
        self.name = name

    @classmethod
    def zero(cls) -> "PsiSpec":
        return cls(PSeries.zero({"y": 1}), "zero")

    @classmethod
    def maps(cls, ymax: int = 24) -> "PsiSpec":
        """psi(y) = log(1+y), the map / fully simple map profile."""
        caps = {"y": ymax}
        terms = {
            (("y", k),): Fraction((-1) ** (k + 1), k) for k in range(1, ymax + 1)
        }
        return cls(PSeries(caps, terms), "maps")

    @classmethod
    def from_phi_coeffs(cls, coeffs: dict, ccap: int, ymax: int = 12) -> "PsiSpec":
        """psi = log(1 + c_1 y + c_2 y^2 + ...).

        ``coeffs`` maps k -> scalar value or the string "sym" for a
        symbolic variable c<k>.
        """
        from .series import series_log

        caps = {"y": ymax, "c": ccap}
        phi = PSeries.const(caps, 1)
        for k, val in coeffs.items():
            if val == "sym":
                phi = phi + PSeries(caps, {(("c" + str(k), 1), ("y", k)): Fraction(1)})
            else:
                phi = phi + PSeries.var(caps, "y", k, Fraction(val))
        return cls(series_log(phi), f"phi{sorted(coeffs)}")

    def is_zero(self) -> bool:
        return self.series.is_zero()

    def content_exponent(self, c: int, caps: dict, hmax: int) -> HLaurent:
        """psi(c*hbar) as an HLaurent in the target ring."""
        out = HLaurent.zero(caps, hmax)
        if c == 0:
            return out
        coeffs = {}
        for k in range(1, min(hmax, self.series.caps.get("y", hmax)) + 1):
            pk = self.series.coeff("y", k)
            if pk.is_zero():
                continue
            coeffs[k] = pk.truncate_to(caps) * Fraction(c) ** k
        return HLaurent(caps, hmax, coeffs)


# ---------------------------------------------------------------------------
# Fock vectors


class FockVector:
    """Finite combination of power-sum monomials with HLaurent coefficients."""

    __slots__ = ("caps", "hmax", "energy", "terms")

    def __init__(self, caps, hmax, energy, terms=None):
        self.caps = caps
        self.hmax = hmax
        self.energy = energy
        self.terms: dict = {}
        if terms:
            for lam, h in terms.items():
                if sum(lam) <= energy and not h.is_zero():
                    self.terms[lam] = h

    @classmethod
    def vacuum(cls, caps, hmax, energy) -> "FockVector":
        return cls(caps, hmax, energy, {(): HLaurent.const(caps, hmax, 1)})

    def is_zero(self):
        return not self.terms

    def copy(self):
        out = FockVector(self.caps, self.hmax, self.energy)
        out.terms = dict(self.terms)
        return out

    def __add__(self, other):
        out = FockVector(self.caps, self.hmax, self.energy)
        out.terms = dict(self.terms)
        for lam, h in other.terms.items():
            if lam in out.terms:
                s = out.terms[lam] + h
                if s.is_zero():
                    del out.terms[lam]
                else:
                    out.terms[lam] = s
            else:
                out.terms[lam] = h
        return out

    def __sub__(self, other):
        return self + other.scale(Fraction(-1))

    def scale(self, factor) -> "FockVector":
        out = FockVector(self.caps, self.hmax, self.energy)
        for lam, h in self.terms.items():
            p = h * factor
            if not p.is_zero():
                out.terms[lam] = p
        return out

    def coeff(self, lam: Partition) -> HLaurent:
        return self.terms.get(lam, HLaurent.zero(self.caps, self.hmax))


def apply_J(m: int, v: FockVector) -> FockVector:
    """J_m = m d/dp_m for m>0, multiplication by p_|m| for m<0."""
    if m == 0:
        raise ConfigError("J_0 is zero by convention; refusing silently")
    out = FockVector(v.caps, v.hmax, v.energy)
    if m > 0:
        for lam, h in v.terms.items():
            mult = lam.count(m)
            if mult == 0:
                continue
            nl = list(lam)
            nl.remove(m)
            nl = tuple(nl)
            c = h * Fraction(m * mult)
            out.terms[nl] = out.terms[nl] + c if nl in out.terms else c
    else:
        part = -m
        for lam, h in v.terms.items():
            if sum(lam) + part > v.energy:
                continue  # energy cap: overflow terms drop by design
            nl = tuple(sorted(lam + (part,), reverse=True))
            out.terms[nl] = out.terms[nl] + h if nl in out.terms else h
    out.terms = {l: h for l, h in out.terms.items() if not h.is_zero()}
    return out


def raising_exp_ket(caps, hmax, energy, weights: dict) -> FockVector:
    """e^{sum_j weights[j] * J_{-j}} |0>, expanded within the energy cap.

    ``weights[j]`` is an HLaurent (typically s_j/(j*hbar)).
    """
    parts = sorted(weights)
    out = FockVector(caps, hmax, energy)

    def rec(idx, lam, coeff):
        out.terms[tuple(sorted(lam, reverse=True))] = (
            out.terms.get(tuple(sorted(lam, reverse=True)), HLaurent.zero(caps, hmax))
            + coeff
        )
        for i in range(idx, len(parts)):
            j = parts[i]
            size = sum(lam)
            k = 1
            c = coeff
            while size + j * k <= energy:
                c = c * weights[j] * Fraction(1, k)
                if c.is_zero():
                    break
                rec(i + 1, lam + [j] * k, c)
                k += 1

    rec(0, [], HLaurent.const(caps, hmax, 1))
    out.terms = {l: h for l, h in out.terms.items() if not h.is_zero()}
    return out


def exp_J(v: FockVector, weights: dict) -> FockVector:
    """e^{sum_m weights[m] * J_m} v for single-signed mode index sets.

    Lowering (all m>0) terminates because the energy is finite；raising
    (all m<0) terminates because the energy cap drops overflow terms.
    Mixed signs would need normal ordering and are refused.
    """
    if weights and min(weights) < 0 < max(weights):
        raise ConfigError("exp_J needs all positive or all negative modes")
    acc = v.copy()
    cur = v
    k = 1
    while True:
        nxt = FockVector(v.caps, v.hmax, v.energy)
        for i, wgt in weights.items():
            step = apply_J(i, cur)
            if step.is_zero():
                continue
            nxt = nxt + step.scale(wgt)
        cur = nxt.scale(Fraction(1, k))
        if cur.is_zero():
            break
        acc = acc + cur
        k += 1
    return acc


# ---------------------------------------------------------------------------
# the diagonal operator


class DiagonalOperator:
    """D_psi, diagonal on Schur vectors with content-driven eigenvalues."""

    def __init__(self, psi: PsiSpec, caps, hmax, sign: int = 1):
        self.psi = psi
        self.caps = caps
        self.hmax = hmax
        self.sign = sign
        self._eig: dict = {}
        self._content_exp: dict = {}

    def _exponent(self, c: int) -> HLaurent:
        if c not in self._content_exp:
            self._content_exp[c] = self.psi.content_exponent(c, self.caps, self.hmax)
        return self._content_exp[c]

    def eigenvalue(self, lam: Partition) -> HLaurent:
        key = lam
        if key not in self._eig:
            if self.psi.name == "maps":
                # closed form: prod over boxes of (1 + content*hbar)
                prod = HLaurent.const(self.caps, self.hmax, 1)
                for i, row in enumerate(lam):
                    for j in range(row):
                        c = j - i
                        if c:
                            prod = prod * HLaurent(
                                self.caps,
                                self.hmax,
                                {0: Fraction(1), 1: Fraction(c)},
                            )
                self._eig[key] = prod if self.sign > 0 else prod.invert()
            else:
                total = HLaurent.zero(self.caps, self.hmax)
                for i, row in enumerate(lam):
                    for j in range(row):
                        total = total + self._exponent(j - i)
                if self.sign < 0:
                    total = -total
                self._eig[key] = hl_exp(total)
        return self._eig[key]

    def inverse(self) -> "DiagonalOperator":
        return DiagonalOperator(self.psi, self.caps, self.hmax, -self.sign)


def apply_diagonal(op: DiagonalOperator, v: FockVector) -> FockVector:
    if op.psi.is_zero():
        return v
    out = FockVector(v.caps, v.hmax, v.energy)
    by_level: dict = {}
    for lam, h in v.terms.items():
        by_level.setdefault(sum(lam), {})[lam] = h
    for n, level in by_level.items():
        if n == 0:
            for lam, h in level.items():
                out.terms[lam] = h
            continue
        schur = p_to_schur(level, n)
        scaled = {lam: op.eigenvalue(lam) * c for lam, c in schur.items()}
        back = schur_to_p(scaled, n)
        for mu, h in back.items():
            if not h.is_zero():
                out.terms[mu] = out.terms[mu] + h if mu in out.terms else h
    out.terms = {l: h for l, h in out.terms.items() if not h.is_zero()}
    return out


# ---------------------------------------------------------------------------
# VEV evaluation contexts


@dataclass
class VevConfig:
    """Everything needed to evaluate one family of VEVs.

    t_weights / s_weights map the index i to the scalar weight t_i / s_i
    (a PSeries in the shared parameter ring); the structural 1/(i*hbar)
    factors are supplied by the pipeline itself.
    """

    caps: dict
    hmax: int
    energy: int
    t_weights: dict = field(default_factory=dict)
    s_weights: dict = field(default_factory=dict)
    psi: PsiSpec = field(default_factory=PsiSpec.maps)

    @classmethod
    def maps(cls, t_weights: dict, energy: int, gmax: int, nmax: int, caps: dict):
        """Map enumeration: s_k = delta_{k,2}, psi = log(1+y).

        The hbar ceiling covers the requested targets plus the full
        1/hbar budget (one per raising insertion, one per t-insertion):
        intermediate eigenvalue terms that high can still fall back into
        the target window later.
        """
        t_budget = caps.get("t", 0)
        hmax = max(2 * gmax - 2 + nmax, 0) + energy // 2 + t_budget + 2
        s_weights = {2: PSeries.const(caps, 1)}
        return cls(caps, hmax, energy, t_weights, s_weights, PsiSpec.maps())


ENERGY_CEILING = 26  # character tables beyond this are not desk scale


def maps_config(
    mu_cap: int,
    t_degrees: tuple = (),
    t_order: int = 0,
    gmax: int = 2,
    nmax: int = 3,
) -> VevConfig:
    """Derive a maps VevConfig: E = mu_cap + t_order * max face degree.

    The derived energy is a hard requirement for correctness of every
    requested coefficient, so an over-budget request is an error here
    rather than a corrupted number later.
    """
    q = max(t_degrees, default=0)
    energy = mu_cap + t_order * q
    if energy > ENERGY_CEILING:
        raise TruncationError(
            f"required energy {energy} exceeds ceiling {ENERGY_CEILING}",
            required=energy,
        )
    caps = {"t": t_order} if t_degrees else {}
    t_weights = {i: PSeries.var(caps, f"t{i}") for i in t_degrees}
    return VevConfig.maps(t_weights, energy, gmax, nmax, caps)


class FockContext:
    """Caches the ket and all extracted VEVs for one VevConfig."""

    def __init__(self, cfg: VevConfig, warm: bool = True):
        self.cfg = cfg
        if warm:
            warm_character_cache(cfg.energy)
        self._kets: dict = {}
        self._disc: dict = {}
        self._conn: dict = {}
        self._states: dict = {}
        self._diag = DiagonalOperator(cfg.psi, cfg.caps, cfg.hmax, 1)
        self._diag_inv = self._diag.inverse()

    # -- kets ---------------------------------------------------------

    def ket(self, fully_simple: bool) -> FockVector:
        if fully_simple in self._kets:
            return self._kets[fully_simple]
        cfg = self.cfg
        raise_w = {
            j: HLaurent(cfg.caps, cfg.hmax, {-1: s * Fraction(1, j)})
            for j, s in cfg.s_weights.items()
        }
        v = raising_exp_ket(cfg.caps, cfg.hmax, cfg.energy, raise_w)
        v = apply_diagonal(self._diag, v)
        if cfg.t_weights:
            lower_w = {
                i: HLaurent(cfg.caps, cfg.hmax, {-1: t * Fraction(1, i)})
                for i, t in cfg.t_weights.items()
            }
            v = exp_J(v, lower_w)
        if fully_simple:
            v = apply_diagonal(self._diag_inv, v)
        self._kets[fully_simple] = v
        return v

    # -- VEVs -----------------------------------------------------------

    def _extract_state(self, mu_sorted: tuple, fully_simple: bool) -> FockVector:
        """Partial boundary extraction, shared across multisets by suffix."""
        key = (mu_sorted, fully_simple)
        cached = self._states.get(key)
        if cached is not None:
            return cached
        if not mu_sorted:
            v = self.ket(fully_simple)
        else:
            m, rest = mu_sorted[0], mu_sorted[1:]
            v = apply_J(m, self._extract_state(rest, fully_simple)).scale(
                Fraction(1, m)
            )
        self._states[key] = v
        return v

    def disconnected(self, mu, fully_simple: bool) -> HLaurent:
        """<0| prod_i J_{mu_i}/mu_i |ket>;  mu a multiset (any order)."""
        mu_sorted = tuple(sorted(mu))
        key = (mu_sorted, fully_simple)
        if key in self._disc:
            return self._disc[key]
        if sum(mu) > self.cfg.energy:
            raise TruncationError(
                f"energy cap {self.cfg.energy} < |mu|={sum(mu)}",
                required=sum(mu),
            )
        out = self._extract_state(mu_sorted, fully_simple).coeff(())
        self._disc[key] = out
        return out

    def closed_part(self) -> HLaurent:
        """Z_0: the empty-boundary VEV (closed-surface contributions)."""
        return self.ket(False).coeff(())

    def _closed_inverse(self) -> HLaurent:
        """1/Z_0.  Z_0 = 1 + nilpotent(t), inverted by a geometric sum
        (the t-grading terminates it regardless of the hbar window)."""
        if not hasattr(self, "_z0inv"):
            z0 = self.closed_part()
            nil = z0 - 1
            if nil.is_zero():
                self._z0inv = None  # Z_0 == 1, nothing to divide out
            else:
                acc = HLaurent.const(self.cfg.caps, self.cfg.hmax, 1)
                pw = HLaurent.const(self.cfg.caps, self.cfg.hmax, 1)
                sign = 1
                while True:
                    pw = pw * nil
                    if pw.is_zero():
                        break
                    sign = -sign
                    acc = acc + pw * sign
                self._z0inv = acc
        return self._z0inv

    def normalized_moment(self, mu, fully_simple: bool) -> HLaurent:
        """Disconnected VEV divided by Z_0: closed components dropped.

        The paper's inclusion-exclusion produces connected counts only
        for cumulants of the normalized measure; the brute-force
        enumerator is what caught this (closed internal-only components
        otherwise leak into connected numbers at shifted genus).
        """
        z0inv = self._closed_inverse()
        disc = self.disconnected(mu, fully_simple)
        return disc if z0inv is None else disc * z0inv

    def connected(self, mu, fully_simple: bool) -> HLaurent:
        """Connected VEV via the cumulant recursion (multiset-memoized).

        C(S) = m(S) - sum over proper subsets T containing the first
        element of C(T) m(S minus T), on Z_0-normalized moments m.
        """
        mu = tuple(sorted(mu))
        key = (mu, fully_simple)
        if key in self._conn:
            return self._conn[key]
        n = len(mu)
        if n == 1:
            out = self.normalized_moment(mu, fully_simple)
        else:
            total = self.normalized_moment(mu, fully_simple)
            rest = mu[1:]
            m = n - 1
            seen: dict = {}
            for mask in range(1 << m):
                sub = tuple(sorted(mu[:1] + tuple(rest[i] for i in range(m) if mask >> i & 1)))
                if len(sub) == n:
                    continue
                comp = tuple(sorted(rest[i] for i in range(m) if not mask >> i & 1))
                pairkey = (sub, comp)
                if pairkey in seen:
                    total = total - seen[pairkey]
                    continue
                term = self.connected(sub, fully_simple) * self.normalized_moment(
                    comp, fully_simple
                )
                seen[pairkey] = term
                total = total - term
            out = total
        self._conn[key] = out
        return out

    # -- named quantities -------------------------------------------------

    def map_series(self, mu, fully_simple: bool, g: int) -> PSeries:
        """Map_{g;mu} (or FSMap) as a series in the parameter ring."""
        n = len(mu)
        return self.connected(mu, fully_simple).coeff(2 * g - 2 + n)

    def map_coefficient(self, g: int, mu, internal: dict, fully_simple: bool):
        """[prod_i t_i^{m_i}] Map_{g;mu}: exact Fraction, budget-checked.

        ``internal`` maps face degree i -> exponent m_i.  The weighted
        count convention puts 1/prod m_i! inside this coefficient.
        """
        needed = sum(mu) + sum(i * m for i, m in internal.items())
        if needed > self.cfg.energy:
            raise TruncationError(
                f"energy {self.cfg.energy} < required {needed}", required=needed
            )
        series = self.map_series(mu, fully_simple, g)
        mono = {f"t{i}": m for i, m in internal.items() if m}
        return series.coeff_mono(mono)

    def npoint_series(
        self, kind: str, g: int, n: int, cap: int, var_prefix: str | None = None
    ) -> PSeries:
        """W_{g,n} (ordinary) or W^vee_{g,n} (fully simple) as a series.

        Output variables are <prefix>1..<prefix>n; the coefficient of
        prod x_i^{mu_i} is prod(mu_i) * Map_{g;mu}.
        """
        fully_simple = {"ordinary": False, "fullysimple": True}[kind]
        if var_prefix is None:
            var_prefix = "w" if fully_simple else "x"
        out_caps = dict(self.cfg.caps)
        out_caps[var_prefix] = cap
        out = PSeries.zero(out_caps)
        for mu in _compositions(n, cap):
            c = self.connected(mu, fully_simple).coeff(2 * g - 2 + n)
            if c.is_zero():
                continue
            weight = Fraction(1)
            for m in mu:
                weight *= m
            mono = {}
            for i, m in enumerate(mu):
                mono[f"{var_prefix}{i + 1}"] = mono.get(f"{var_prefix}{i + 1}", 0) + m
            key = tuple(sorted(mono.items()))
            out = out + PSeries(out_caps, {key: Fraction(1)}) * (
                c.truncate_to(out_caps) * weight
            )
        return out


def _compositions(n: int, cap: int):
    """All tuples (mu_1..mu_n), mu_i >= 1, sum <= cap (ordered)."""
    if n == 0:
        yield ()
        return
    for first in range(1, cap - (n - 1) + 1):
        for rest in _compositions(n - 1, cap - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# monotone Hurwitz numbers


def monotone_hurwitz(mu, lam, caps, hmax) -> HLaurent:
    """H^<=_{mu;lam} = <0| prod J_{mu_i}/mu_i  D^{-1}  prod J_{-lam_j}/lam_j |0>
    with hbar -> -hbar applied, for psi = log(1+y)."""
    if sum(mu) != sum(lam):
        return HLaurent.zero(caps, hmax)
    energy = sum(lam)
    v = FockVector.vacuum(caps, hmax, energy)
    for part in lam:
        v = apply_J(-part, v).scale(Fraction(1, part))
    dinv = DiagonalOperator(PsiSpec.maps(), caps, hmax, -1)
    v = apply_diagonal(dinv, v)
    for part in sorted(mu, reverse=True):
        v = apply_J(part, v).scale(Fraction(1, part))
    return v.coeff(()).flip_hbar()


def connect(values: dict, n: int):
    """Inclusion-exclusion: connected VEV from all subset VEVs.

    ``values`` maps frozenset(indices) -> value for every nonempty
    subset of range(n).  Direct implementation of the alternating
    set-partition sum; the pipeline uses the equivalent memoized
    cumulant recursion.
    """
    full = frozenset(range(n))
    missing = [
        s
        for k in range(1, n + 1)
        for s in _subsets(full, k)
        if frozenset(s) not in values
    ]
    if missing:
        raise ConfigError(f"missing subset VEVs: {missing[:3]}")
    total = None
    for blocks in _set_partitions(sorted(full)):
        l = len(blocks)
        prod = None
        for b in blocks:
            v = values[frozenset(b)]
            prod = v if prod is None else prod * v
        # (-1)^(l-1)/l over ordered block tuples = (-1)^(l-1) (l-1)!
        # per unordered partition.
        term = prod * Fraction((-1) ** (l - 1) * factorial(l - 1))
        total = term if total is None else total + term
    return total


def _subsets(s, k):
    from itertools import combinations

    return [set(c) for c in combinations(sorted(s), k)]


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part
