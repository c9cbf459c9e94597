"""Truncated multivariate power series over exact rationals.

The one scalar ring used everywhere in the symbolic pipeline.  A PSeries
carries an explicit cap table: variables are assigned to grading groups
(``t4`` -> group ``t``, ``u2`` -> group ``u``, ...; a variable listed
verbatim in the cap table is its own group) and every group has a
total-degree cap.  Terms beyond a cap are dropped by arithmetic, so the
ring is a quotient; mixing different cap tables is a hard error rather
than a silent coercion.

Coefficients are ``fractions.Fraction`` in exact mode.  The same class is
reused with ``float`` coefficients by the numeric pipelines; only exact
mode promises bit-exact equality.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import ConfigError, NotInvertible

Monomial = tuple  # sorted tuple of (var, exp) pairs, exp > 0

_EMPTY: Monomial = ()


_PREFIX_CACHE: dict = {}


def _prefix(var: str) -> str:
    g = _PREFIX_CACHE.get(var)
    if g is None:
        i = 0
        while i < len(var) and var[i].isalpha():
            i += 1
        g = var[:i]
        if not g:
            raise ConfigError(f"variable name {var!r} has no alphabetic prefix")
        _PREFIX_CACHE[var] = g
    return g


def var_group(var: str, caps: dict) -> str:
    if var in caps:
        return var
    return _prefix(var)


def _merge(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _group_degrees(mono: Monomial, caps: dict) -> dict:
    out: dict = {}
    for v, e in mono:
        g = var_group(v, caps)
        out[g] = out.get(g, 0) + e
    return out


def _within_caps(mono: Monomial, caps: dict) -> bool:
    for g, d in _group_degrees(mono, caps).items():
        if g not in caps:
            raise ConfigError(f"no cap declared for grading group {g!r}")
        if d > caps[g]:
            return False
    return True


def _inv_scalar(c):
    if isinstance(c, Fraction):
        return Fraction(1) / c
    if isinstance(c, int):
        return Fraction(1, c)
    return 1.0 / c  # float / complex numeric mode


class PSeries:
    """Immutable truncated multivariate power series."""

    __slots__ = ("caps", "terms")

    def __init__(self, caps: dict, terms: dict | None = None):
        self.caps = dict(caps)
        clean = {}
        if terms:
            for mono, c in terms.items():
                if c == 0:
                    continue
                if _within_caps(mono, self.caps):
                    clean[mono] = c
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def const(cls, caps: dict, value) -> "PSeries":
        if isinstance(value, int):
            value = Fraction(value)
        return cls(caps, {_EMPTY: value})

    @classmethod
    def var(cls, caps: dict, name: str, exp: int = 1, coeff=1) -> "PSeries":
        if isinstance(coeff, int):
            coeff = Fraction(coeff)
        return cls(caps, {((name, exp),): coeff})

    @classmethod
    def zero(cls, caps: dict) -> "PSeries":
        return cls(caps, {})

    # -- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def constant_term(self):
        return self.terms.get(_EMPTY, Fraction(0))

    def degree(self, var: str) -> int:
        d = 0
        for mono in self.terms:
            for v, e in mono:
                if v == var and e > d:
                    d = e
        return d

    def variables(self) -> set:
        out = set()
        for mono in self.terms:
            for v, _ in mono:
                out.add(v)
        return out

    def _check_compat(self, other: "PSeries"):
        if self.caps != other.caps:
            raise ConfigError(
                f"cap mismatch: {self.caps} vs {other.caps}"
            )

    def _lift(self, value) -> "PSeries":
        if isinstance(value, PSeries):
            self._check_compat(value)
            return value
        return PSeries.const(self.caps, value)

    # -- ring operations ------------------------------------------------

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            s = terms.get(mono, 0) + c
            if s == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = s
        out = PSeries(self.caps)
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = PSeries(self.caps)
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, PSeries):
            if other == 0:
                return PSeries.zero(self.caps)
            if isinstance(other, int):
                other = Fraction(other)
            out = PSeries(self.caps)
            out.terms = {m: c * other for m, c in self.terms.items()}
            return out
        self._check_compat(other)
        caps = self.caps
        acc: dict = {}
        small, big = self.terms, other.terms
        if len(small) > len(big):
            small, big = big, small
        # group-degree vectors precomputed per input monomial
        gd_small = {m: _group_degrees(m, caps) for m in small}
        gd_big = {m: _group_degrees(m, caps) for m in big}
        for m1, c1 in small.items():
            g1 = gd_small[m1]
            for m2, c2 in big.items():
                mono = _merge(m1, m2)
                prev = acc.get(mono)
                if prev is not None:
                    acc[mono] = prev + c1 * c2
                    continue
                g2 = gd_big[m2]
                ok = True
                for g, d in g2.items():
                    if g1.get(g, 0) + d > caps[g]:
                        ok = False
                        break
                if ok:
                    acc[mono] = c1 * c2
        out = PSeries(caps)
        out.terms = {m: c for m, c in acc.items() if c != 0}
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.invert() ** (-n)
        result = PSeries.const(self.caps, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, float)):
            other = PSeries.const(self.caps, other)
        if not isinstance(other, PSeries):
            return NotImplemented
        return self.caps == other.caps and self.terms == other.terms

    def __ne__(self, other):
        r = self.__eq__(other)
        return NotImplemented if r is NotImplemented else not r

    def invert(self) -> "PSeries":
        """Inverse of a unit series: constant term must be invertible."""
        c0 = self.constant_term
        if c0 == 0:
            raise NotInvertible("zero constant term")
        c0inv = _inv_scalar(c0)
        # self = c0 (1 + r) with r nilpotent under the caps
        r = (self * c0inv) - 1
        acc = PSeries.const(self.caps, 1)
        pw = PSeries.const(self.caps, 1)
        sign = 1
        while True:
            pw = pw * r
            if pw.is_zero():
                break
            sign = -sign
            acc = acc + pw * sign
        return acc * c0inv

    def __truediv__(self, other):
        if isinstance(other, PSeries):
            return self * other.invert()
        return self * _inv_scalar(other if not isinstance(other, int) else Fraction(other))

    # -- calculus / extraction ------------------------------------------

    def diff(self, var: str) -> "PSeries":
        terms = {}
        for mono, c in self.terms.items():
            for i, (v, e) in enumerate(mono):
                if v == var:
                    if e == 1:
                        nm = mono[:i] + mono[i + 1:]
                    else:
                        nm = mono[:i] + ((v, e - 1),) + mono[i + 1:]
                    terms[nm] = terms.get(nm, 0) + c * e
                    break
        out = PSeries(self.caps)
        out.terms = {m: c for m, c in terms.items() if c != 0}
        return out

    def euler(self, var: str) -> "PSeries":
        """The scaling flow var * d/dvar."""
        terms = {}
        for mono, c in self.terms.items():
            for v, e in mono:
                if v == var:
                    terms[mono] = c * e
                    break
        out = PSeries(self.caps)
        out.terms = terms
        return out

    def coeff(self, var: str, k: int) -> "PSeries":
        """Coefficient of var**k, a series in the remaining variables."""
        terms = {}
        for mono, c in self.terms.items():
            e = 0
            rest = []
            for v, d in mono:
                if v == var:
                    e = d
                else:
                    rest.append((v, d))
            if e == k:
                terms[tuple(rest)] = c
        out = PSeries(self.caps)
        out.terms = terms
        return out

    def coeff_mono(self, mono_dict: dict):
        """Scalar coefficient of the exact monomial prod var**exp."""
        mono = tuple(sorted((v, e) for v, e in mono_dict.items() if e))
        return self.terms.get(mono, Fraction(0))

    def max_exp(self, var: str) -> int:
        return self.degree(var)

    def rename(self, var: str, newvar: str) -> "PSeries":
        """Substitute var -> newvar (exponents merge if newvar present)."""
        terms = {}
        for mono, c in self.terms.items():
            d = dict(mono)
            if var in d:
                e = d.pop(var)
                d[newvar] = d.get(newvar, 0) + e
            mono2 = tuple(sorted(d.items()))
            if _within_caps(mono2, self.caps):
                terms[mono2] = terms.get(mono2, 0) + c
        out = PSeries(self.caps)
        out.terms = {m: c for m, c in terms.items() if c != 0}
        return out

    def subst(self, var: str, series: "PSeries") -> "PSeries":
        """Substitute var -> series.  The series must have zero constant
        term, otherwise dropped high-order terms would corrupt low orders.
        """
        self._check_compat(series)
        if series.constant_term != 0:
            raise ConfigError("substitution target must have zero constant term")
        by_exp: dict = {}
        top = 0
        for mono, c in self.terms.items():
            e = 0
            rest = []
            for v, d in mono:
                if v == var:
                    e = d
                else:
                    rest.append((v, d))
            by_exp.setdefault(e, {})[tuple(rest)] = c
            top = max(top, e)
        # Horner from the top exponent down
        acc = PSeries.zero(self.caps)
        for e in range(top, -1, -1):
            acc = acc * series
            if e in by_exp:
                part = PSeries(self.caps)
                part.terms = dict(by_exp[e])
                acc = acc + part
        return acc

    def specialize(self, values: dict) -> "PSeries":
        """Assign scalar values to some variables (exact substitution)."""
        terms: dict = {}
        for mono, c in self.terms.items():
            coeff = c
            rest = []
            for v, e in mono:
                if v in values:
                    coeff = coeff * values[v] ** e
                else:
                    rest.append((v, e))
            key = tuple(rest)
            terms[key] = terms.get(key, 0) + coeff
        out = PSeries(self.caps)
        out.terms = {m: c for m, c in terms.items() if c != 0}
        return out

    def map_coeffs(self, fn) -> "PSeries":
        out = PSeries(self.caps)
        out.terms = {m: fn(c) for m, c in self.terms.items() if fn(c) != 0}
        return out

    def truncate_to(self, caps: dict) -> "PSeries":
        """Re-truncate into a (usually smaller or extended) cap table."""
        return PSeries(caps, self.terms)

    # -- presentation ----------------------------------------------------

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mono, c in sorted(self.terms.items()):
            mstr = "*".join(f"{v}^{e}" if e > 1 else v for v, e in mono)
            bits.append(f"({c})" + (f"*{mstr}" if mstr else ""))
        return " + ".join(bits)

    def to_json_obj(self) -> list:
        """Canonical encoding: sorted list of {"exp", "num", "den"}."""
        out = []
        for mono, c in self.terms.items():
            exp = {v: e for v, e in mono}
            if isinstance(c, Fraction):
                rec = {"exp": exp, "num": str(c.numerator), "den": str(c.denominator)}
            elif isinstance(c, int):
                rec = {"exp": exp, "num": str(c), "den": "1"}
            else:
                rec = {"exp": exp, "value": repr(c)}
            out.append(rec)
        out.sort(key=lambda r: sorted(r["exp"].items()))
        return out


# -- series transcendentals (truncated, exact) ---------------------------


def series_exp(a: PSeries) -> PSeries:
    """exp of a series with zero constant term."""
    if a.constant_term != 0:
        raise ConfigError("series_exp needs zero constant term")
    acc = PSeries.const(a.caps, 1)
    pw = PSeries.const(a.caps, 1)
    k = 1
    while True:
        pw = pw * a
        if pw.is_zero():
            break
        acc = acc + pw * Fraction(1, factorial(k))
        k += 1
    return acc


def series_log(a: PSeries) -> PSeries:
    """log of a unit series with constant term 1."""
    if a.constant_term != 1:
        raise ConfigError("series_log needs constant term 1")
    r = a - 1
    acc = PSeries.zero(a.caps)
    pw = PSeries.const(a.caps, 1)
    k = 1
    sign = 1
    while True:
        pw = pw * r
        if pw.is_zero():
            break
        acc = acc + pw * Fraction(sign, k)
        sign = -sign
        k += 1
    return acc


def revert_series(f: PSeries, var: str) -> PSeries:
    """Compositional inverse g of a univariate-in-var series f.

    Requires f(0)=0 in var (every term carries var) and [var^1]f
    invertible.  Lagrange inversion:
        [var^n] g = (1/n) [var^(n-1)] (var/f)^n.
    Coefficients may live in the parameter subring.
    """
    for mono in f.terms:
        if not any(v == var for v, _ in mono):
            raise NotInvertible("revert_series input must vanish at 0")
    lead = f.coeff(var, 1)
    if lead.constant_term == 0:
        raise NotInvertible("revert_series needs invertible linear coefficient")
    cap = f.caps[var_group(var, f.caps)]
    # h = f/var as a series (shift all var exponents down by one)
    h = PSeries(f.caps)
    hterms = {}
    for mono, c in f.terms.items():
        d = dict(mono)
        d[var] -= 1
        if d[var] == 0:
            del d[var]
        hterms[tuple(sorted(d.items()))] = c
    h.terms = hterms
    hinv = h.invert()
    out = PSeries.zero(f.caps)
    pw = PSeries.const(f.caps, 1)
    for n in range(1, cap + 1):
        pw = pw * hinv
        cn = pw.coeff(var, n - 1) * Fraction(1, n)
        out = out + cn * PSeries.var(f.caps, var, n)
    return out


def total_degree(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def group_degree(mono: Monomial, group: str, caps: dict) -> int:
    return sum(e for v, e in mono if var_group(v, caps) == group)


def divide_diff(
    a: PSeries, v1: str, v2: str, exact_to: int | None = None, tol: float = 0.0
) -> PSeries:
    """Exact division of a by (v1 - v2); raises if the remainder survives.

    Synthetic division along v1-degree slices.  ``exact_to`` bounds the
    degree in v1/v2's grading group up to which the input is exact:
    remainder terms beyond it are truncation junk and are discarded
    instead of failing.  ``tol`` permits float-mode roundoff in the
    remainder (exact mode keeps the strict zero test).
    """
    top = a.degree(v1)
    slices = {i: a.coeff(v1, i) for i in range(top + 1)}
    quot = PSeries.zero(a.caps)
    carry = PSeries.zero(a.caps)
    for i in range(top, 0, -1):
        r = slices.get(i, PSeries.zero(a.caps)) + carry
        quot = quot + r * PSeries.var(a.caps, v1, i - 1) if i > 1 else quot + r
        carry = r * PSeries.var(a.caps, v2)
    rem = slices.get(0, PSeries.zero(a.caps)) + carry
    if exact_to is not None:
        grp = var_group(v1, a.caps)
        rem = PSeries(
            a.caps,
            {
                m: c
                for m, c in rem.terms.items()
                if group_degree(m, grp, a.caps) <= exact_to
            },
        )
        quot = PSeries(
            a.caps,
            {
                m: c
                for m, c in quot.terms.items()
                if group_degree(m, grp, a.caps) <= exact_to - 1
            },
        )
    if not rem.is_zero():
        if tol and all(abs(complex(c)) <= tol for c in rem.terms.values()):
            pass
        else:
            raise ConfigError("divide_diff: nonzero remainder, not divisible")
    return quot


# -- the S-function -------------------------------------------------------


def s_coeff(k: int) -> Fraction:
    """[x^(2k)] of S(x) = (e^(x/2)-e^(-x/2))/x = 1 + x^2/24 + ..."""
    return Fraction(1, 4 ** k * factorial(2 * k + 1))


def s_series(caps: dict, arg: PSeries) -> PSeries:
    """S(arg) truncated; arg must have zero constant term."""
    if arg.constant_term != 0:
        raise ConfigError("s_series argument needs zero constant term")
    acc = PSeries.const(caps, 1)
    sq = arg * arg
    pw = PSeries.const(caps, 1)
    k = 1
    while True:
        pw = pw * sq
        if pw.is_zero():
            break
        acc = acc + pw * s_coeff(k)
        k += 1
    return acc


def s_operator_on_monomial(k: int, order: int) -> PSeries:
    """The scalar u*hbar*k*S(u*hbar*k) expanded to the given hbar order.

    Acting on z^k, the operator u*hbar*S(u*hbar*z d/dz)*(z d/dz) has this
    as its eigenvalue.  Returned in variables (u, hbar).
    """
    caps = {"u": order + 1, "hbar": order}
    if k == 0:
        return PSeries.zero(caps)
    out = PSeries.zero(caps)
    j = 0
    while 2 * j + 1 <= order:
        c = s_coeff(j) * Fraction(k) ** (2 * j + 1)
        out = out + PSeries(caps, {(("hbar", 2 * j + 1), ("u", 2 * j + 1)): c})
        j += 1
    return out
