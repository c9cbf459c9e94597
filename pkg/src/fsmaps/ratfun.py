"""Polynomials and rational functions in the spectral variable z, plus
truncated Laurent jets for residue extraction.

All three are generic over the coefficient ring: exact PSeries (symbolic
t-parameters), Fraction, or float/complex in numeric mode.  Jets track
their own exactness window (minexp..top) so that a product or inverse
can never silently promise more orders than its inputs support.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ConfigError, NotInvertible


def ring_inv(c):
    if hasattr(c, "invert"):
        return c.invert()
    if isinstance(c, int):
        return Fraction(1, c)
    if isinstance(c, Fraction):
        return Fraction(1) / c
    return 1.0 / c if not isinstance(c, complex) else 1.0 / c


def ring_is_zero(c) -> bool:
    if hasattr(c, "is_zero"):
        return c.is_zero()
    return c == 0


class ZPoly:
    """Dense polynomial in z, ascending coefficients over any ring."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = list(coeffs)
        while cs and ring_is_zero(cs[-1]):
            cs.pop()
        self.coeffs = cs

    @classmethod
    def const(cls, c) -> "ZPoly":
        return cls([c])

    @classmethod
    def z(cls, one=Fraction(1)) -> "ZPoly":
        return cls([one * 0, one])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return None

    def coeff(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return 0

    def __add__(self, other):
        if not isinstance(other, ZPoly):
            other = ZPoly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        out = []
        for i in range(n):
            a = self.coeffs[i] if i < len(self.coeffs) else None
            b = other.coeffs[i] if i < len(other.coeffs) else None
            if a is None:
                out.append(b)
            elif b is None:
                out.append(a)
            else:
                out.append(a + b)
        return ZPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ZPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, ZPoly):
            other = ZPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return ZPoly.const(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, ZPoly):
            if ring_is_zero(other):
                return ZPoly([])
            return ZPoly([c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return ZPoly([])
        out = [None] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                p = a * b
                out[i + j] = p if out[i + j] is None else out[i + j] + p
        return ZPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = ZPoly.const(self._one())
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def _one(self):
        for c in self.coeffs:
            return c * 0 + 1
        return Fraction(1)

    def __eq__(self, other):
        if not isinstance(other, ZPoly):
            other = ZPoly.const(other)
        return (self - other).is_zero()

    def diff(self) -> "ZPoly":
        return ZPoly([c * k for k, c in enumerate(self.coeffs)][1:])

    def eval(self, x):
        """Horner evaluation; x may be a scalar, Jet, PSeries, ZRat..."""
        if self.is_zero():
            return x * 0
        acc = x.scalar_like(self.coeffs[-1]) if isinstance(x, Jet) else self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def shift_eval(self, p):
        """Coefficients of self(p + e) as a polynomial in e (binomial)."""
        out = [self.coeffs[-1]] if self.coeffs else []
        for c in reversed(self.coeffs[:-1]):
            # out(e) * (p + e) + c
            new = [None] * (len(out) + 1)
            for k, a in enumerate(out):
                ap = a * p
                new[k] = ap if new[k] is None else new[k] + ap
                new[k + 1] = a if new[k + 1] is None else new[k + 1] + a
            new[0] = new[0] + c
            out = new
        return ZPoly(out)

    def divmod(self, other: "ZPoly"):
        """Division with remainder; the divisor's leading coefficient must
        be invertible in the coefficient ring."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        lead_inv = ring_inv(other.coeffs[-1])
        q = [None] * max(0, len(self.coeffs) - len(other.coeffs) + 1)
        rem = list(self.coeffs)
        dn = len(other.coeffs)
        while len(rem) >= dn:
            c = rem[-1] * lead_inv
            k = len(rem) - dn
            q[k] = c
            for i, b in enumerate(other.coeffs):
                rem[k + i] = rem[k + i] - c * b
            while rem and ring_is_zero(rem[-1]):
                rem.pop()
        return ZPoly([c if c is not None else 0 for c in q]), ZPoly(rem)

    def try_exact_divide(self, other: "ZPoly"):
        """self / other if the remainder vanishes, else None."""
        q, r = self.divmod(other)
        return q if r.is_zero() else None

    def subs_recip_numden(self):
        """self(1/z) = (reversed coefficients) / z^degree."""
        return ZPoly(list(reversed(self.coeffs))), self.degree

    def map_coeffs(self, fn) -> "ZPoly":
        return ZPoly([fn(c) for c in self.coeffs])

    def __repr__(self):
        return "ZPoly(" + ", ".join(repr(c) for c in self.coeffs) + ")"


class ZRat:
    """Rational function num/den in z.

    Kept in a light normal form: common monomial factors of z and scalar
    content are cancelled lazily when the representation grows past a
    size threshold; full gcd reduction over series coefficient rings is
    not attempted.  Equality is decided by cross-multiplication.
    """

    __slots__ = ("num", "den")
    REDUCE_DEGREE = 24

    def __init__(self, num: ZPoly, den: ZPoly):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den
        if den.degree > self.REDUCE_DEGREE or num.degree > self.REDUCE_DEGREE:
            self._reduce_monomials()

    def _reduce_monomials(self):
        a, b = self.num, self.den
        ka = next((i for i, c in enumerate(a.coeffs) if not ring_is_zero(c)), 0)
        kb = next((i for i, c in enumerate(b.coeffs) if not ring_is_zero(c)), 0)
        k = min(ka, kb)
        if k and not a.is_zero():
            self.num = ZPoly(a.coeffs[k:])
            self.den = ZPoly(b.coeffs[k:])

    @classmethod
    def const(cls, c) -> "ZRat":
        return cls(ZPoly.const(c), ZPoly.const(Fraction(1)))

    @classmethod
    def from_poly(cls, p: ZPoly) -> "ZRat":
        return cls(p, ZPoly.const(Fraction(1)))

    @classmethod
    def z(cls) -> "ZRat":
        return cls(ZPoly.z(), ZPoly.const(Fraction(1)))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _coerce(self, other) -> "ZRat":
        if isinstance(other, ZRat):
            return other
        if isinstance(other, ZPoly):
            return ZRat.from_poly(other)
        return ZRat.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        return ZRat(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return ZRat(-self.num, self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        return ZRat(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.num.is_zero():
            raise ZeroDivisionError
        return ZRat(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return ZRat(self.den, self.num) ** (-n)
        out = ZRat.const(Fraction(1))
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        return (self.num * o.den - o.num * self.den).is_zero()

    def diff(self) -> "ZRat":
        return ZRat(
            self.num.diff() * self.den - self.num * self.den.diff(),
            self.den * self.den,
        )

    def euler(self) -> "ZRat":
        """z d/dz."""
        d = self.diff()
        return ZRat(d.num * ZPoly.z(), d.den)

    def subs_recip(self) -> "ZRat":
        """self(1/z), again rational in z."""
        n, dn = self.num.subs_recip_numden()
        d, dd = self.den.subs_recip_numden()
        if dn >= dd:
            return ZRat(n, d * (ZPoly.z() ** (dn - dd)))
        return ZRat(n * (ZPoly.z() ** (dd - dn)), d)

    def eval(self, x):
        den_val = self.den.eval(x)
        num_val = self.num.eval(x)
        if isinstance(den_val, Jet) or isinstance(num_val, Jet):
            if not isinstance(den_val, Jet):
                den_val = num_val.scalar_like(den_val)
            return den_val.inv() * num_val
        return num_val * ring_inv(den_val)

    def eval_scalar(self, x):
        return self.num.eval(x) * ring_inv(self.den.eval(x))

    def map_coeffs(self, fn) -> "ZRat":
        return ZRat(self.num.map_coeffs(fn), self.den.map_coeffs(fn))

    def __repr__(self):
        return f"ZRat({self.num!r} / {self.den!r})"


class Jet:
    """Truncated Laurent series in a local parameter, over any ring.

    Exactness window: coefficients for exponents minexp..top inclusive
    are exact; the window shrinks through multiplication and inversion
    exactly as the information content dictates.
    """

    __slots__ = ("minexp", "top", "coeffs")

    def __init__(self, minexp: int, top: int, coeffs):
        self.minexp = minexp
        self.top = top
        cs = list(coeffs)
        want = top - minexp + 1
        if len(cs) < want:
            cs.extend([0] * (want - len(cs)))
        self.coeffs = cs[:want]
        # normalize leading zeros (keeps inversion honest)
        while self.coeffs and ring_is_zero(self.coeffs[0]):
            self.coeffs.pop(0)
            self.minexp += 1

    @classmethod
    def from_scalar(cls, c, top: int) -> "Jet":
        return cls(0, top, [c])

    @classmethod
    def variable(cls, top: int, one=Fraction(1)) -> "Jet":
        return cls(1, top, [one])

    def scalar_like(self, c) -> "Jet":
        return Jet(0, self.top, [c])

    def is_zero(self) -> bool:
        return all(ring_is_zero(c) for c in self.coeffs)

    def coeff(self, k):
        if self.minexp <= k <= self.top:
            c = self.coeffs[k - self.minexp]
            return c
        if k > self.top:
            raise ConfigError(f"jet window [{self.minexp},{self.top}] below {k}")
        return 0

    def _align(self, other: "Jet"):
        minexp = min(self.minexp, other.minexp)
        top = min(self.top, other.top)
        return minexp, top

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.from_scalar(other, self.top)
        minexp, top = self._align(other)
        out = []
        for k in range(minexp, top + 1):
            a = self.coeffs[k - self.minexp] if self.minexp <= k <= self.top else None
            b = (
                other.coeffs[k - other.minexp]
                if other.minexp <= k <= other.top
                else None
            )
            if a is None and b is None:
                out.append(0)
            elif a is None:
                out.append(b)
            elif b is None:
                out.append(a)
            else:
                out.append(a + b)
        return Jet(minexp, top, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.minexp, self.top, [-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, Jet):
            other = Jet.from_scalar(other, self.top)
        return self + (-other)

    def __rsub__(self, other):
        return Jet.from_scalar(other, self.top) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            if ring_is_zero(other):
                return Jet(self.minexp, self.top, [])
            return Jet(self.minexp, self.top, [c * other for c in self.coeffs])
        if not self.coeffs or not other.coeffs:
            # zero jet: window still matters
            return Jet(
                self.minexp + other.minexp,
                min(self.top + other.minexp, other.top + self.minexp),
                [],
            )
        minexp = self.minexp + other.minexp
        top = min(self.top + other.minexp, other.top + self.minexp)
        out = [None] * (top - minexp + 1)
        for i, a in enumerate(self.coeffs):
            if ring_is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                k = i + j
                if k >= len(out):
                    break
                p = a * b
                out[k] = p if out[k] is None else out[k] + p
        return Jet(minexp, top, [c if c is not None else 0 for c in out])

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        if n == 0:
            return Jet.from_scalar(Fraction(1), self.top - self.minexp)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def inv(self) -> "Jet":
        """Inverse; the leading stored coefficient must be invertible."""
        if not self.coeffs:
            raise NotInvertible("zero jet")
        v = self.minexp
        c0i = ring_inv(self.coeffs[0])
        body_top = self.top - v  # orders of the normalized body known
        b = [c * c0i for c in self.coeffs]  # b[0] == 1
        inv_body = [1]
        for k in range(1, body_top + 1):
            acc = None
            for j in range(1, min(k, len(b) - 1) + 1):
                if not ring_is_zero(b[j]):
                    term = b[j] * inv_body[k - j]
                    acc = term if acc is None else acc + term
            inv_body.append(-acc if acc is not None else 0)
        return Jet(-v, body_top - v, [c * c0i for c in inv_body])

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.inv()
        return self * ring_inv(other)

    def __rtruediv__(self, other):
        return self.inv() * other

    def flip(self) -> "Jet":
        """Parameter s -> -s."""
        out = [
            -c if (self.minexp + i) % 2 else c for i, c in enumerate(self.coeffs)
        ]
        return Jet(self.minexp, self.top, out)

    def diff(self) -> "Jet":
        out = []
        for i, c in enumerate(self.coeffs):
            k = self.minexp + i
            out.append(c * k)
        if not out:
            return Jet(self.minexp - 1, self.top - 1, [])
        return Jet(self.minexp - 1, self.top - 1, out)

    def truncate(self, top: int) -> "Jet":
        if top >= self.top:
            return self
        return Jet(self.minexp, top, self.coeffs[: top - self.minexp + 1])

    def with_window(self, minexp: int, top: int) -> "Jet":
        """Force the window, zero-filling outside the stored range.

        Only valid where the caller knows the missing orders are genuinely
        zero or will be corrected (e.g. self-correcting Newton loops).
        """
        out = []
        for k in range(minexp, top + 1):
            if self.minexp <= k <= self.top:
                out.append(self.coeffs[k - self.minexp])
            else:
                out.append(0)
        return Jet(minexp, top, out)

    def __repr__(self):
        bits = [
            f"s^{self.minexp + i}*({c!r})"
            for i, c in enumerate(self.coeffs)
            if not ring_is_zero(c)
        ]
        return "Jet[" + ", ".join(bits) + f" +O(s^{self.top + 1})]"
