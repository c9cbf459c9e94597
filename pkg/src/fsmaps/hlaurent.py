"""Laurent series in hbar over PSeries coefficients.

Negative hbar powers are structural in the VEV pipeline (every t- and
s-insertion carries 1/hbar), but always finitely many in a truncated
computation.  Only an upper cap ``hmax`` is enforced; the lower end is
bounded by the operator budget of the computation that built the value.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import ConfigError, NotInvertible
from .series import PSeries


class HLaurent:
    __slots__ = ("caps", "hmax", "coeffs")

    def __init__(self, caps: dict, hmax: int, coeffs: dict | None = None):
        self.caps = dict(caps)
        self.hmax = hmax
        clean = {}
        if coeffs:
            for k, s in coeffs.items():
                if k > hmax:
                    continue
                if isinstance(s, (int, Fraction)):
                    s = PSeries.const(caps, s)
                if not s.is_zero():
                    clean[k] = s
        self.coeffs = clean

    @classmethod
    def const(cls, caps: dict, hmax: int, value) -> "HLaurent":
        return cls(caps, hmax, {0: PSeries.const(caps, value)})

    @classmethod
    def mono(cls, caps: dict, hmax: int, k: int, value=1) -> "HLaurent":
        return cls(caps, hmax, {k: PSeries.const(caps, value)})

    @classmethod
    def zero(cls, caps: dict, hmax: int) -> "HLaurent":
        return cls(caps, hmax, {})

    def is_zero(self) -> bool:
        return not self.coeffs

    def min_exp(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    def coeff(self, k: int) -> PSeries:
        return self.coeffs.get(k, PSeries.zero(self.caps))

    def _check(self, other: "HLaurent"):
        if self.caps != other.caps or self.hmax != other.hmax:
            raise ConfigError("HLaurent window/cap mismatch")

    def __add__(self, other):
        if not isinstance(other, HLaurent):
            other = HLaurent.const(self.caps, self.hmax, other)
        self._check(other)
        coeffs = dict(self.coeffs)
        for k, s in other.coeffs.items():
            t = coeffs.get(k)
            coeffs[k] = s if t is None else t + s
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k: s for k, s in coeffs.items() if not s.is_zero()}
        return out

    __radd__ = __add__

    def __neg__(self):
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k: -s for k, s in self.coeffs.items()}
        return out

    def __sub__(self, other):
        if not isinstance(other, HLaurent):
            other = HLaurent.const(self.caps, self.hmax, other)
        return self + (-other)

    def __rsub__(self, other):
        return HLaurent.const(self.caps, self.hmax, other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, HLaurent):
            # scalar or PSeries multiplier
            if isinstance(other, (int, Fraction, float)):
                if other == 0:
                    return HLaurent.zero(self.caps, self.hmax)
                out = HLaurent(self.caps, self.hmax)
                out.coeffs = {k: s * other for k, s in self.coeffs.items()}
                return out
            if isinstance(other, PSeries):
                out = HLaurent(self.caps, self.hmax)
                out.coeffs = {
                    k: v
                    for k, s in self.coeffs.items()
                    if not (v := s * other).is_zero()
                }
                return out
            return NotImplemented
        self._check(other)
        acc: dict = {}
        for k1, s1 in self.coeffs.items():
            for k2, s2 in other.coeffs.items():
                k = k1 + k2
                if k > self.hmax:
                    continue
                p = s1 * s2
                if p.is_zero():
                    continue
                acc[k] = acc[k] + p if k in acc else p
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k: s for k, s in acc.items() if not s.is_zero()}
        return out

    __rmul__ = __mul__

    def shift(self, d: int) -> "HLaurent":
        """Multiply by hbar**d."""
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k + d: s for k, s in self.coeffs.items() if k + d <= self.hmax}
        return out

    def flip_hbar(self) -> "HLaurent":
        """Substitute hbar -> -hbar."""
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k: (s if k % 2 == 0 else -s) for k, s in self.coeffs.items()}
        return out

    def invert(self) -> "HLaurent":
        """Inverse when the lowest coefficient is a unit PSeries.

        Restricted to min exponent <= 0: for a positive valuation the
        inverse would need coefficients beyond the stored window, and
        silently truncating those is exactly the bug class the window
        discipline exists to prevent.
        """
        if self.is_zero():
            raise NotInvertible("zero HLaurent")
        m = self.min_exp()
        if m > 0:
            raise ConfigError("HLaurent.invert needs min exponent <= 0")
        b = {k - m: s for k, s in self.coeffs.items()}
        top = self.hmax + m  # inverse exponent -m+j stays within hmax
        b0inv = b[0].invert()
        inv = {0: b0inv}
        for k in range(1, top + 1):
            s = PSeries.zero(self.caps)
            for j in range(1, k + 1):
                if j in b and (k - j) in inv:
                    s = s + b[j] * inv[k - j]
            if not s.is_zero():
                inv[k] = -(b0inv * s)
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {k - m: s for k, s in inv.items() if not s.is_zero()}
        return out

    def __truediv__(self, other):
        if isinstance(other, HLaurent):
            return self * other.invert()
        if isinstance(other, PSeries):
            return self * other.invert()
        return self * (Fraction(1) / Fraction(other))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HLaurent.const(self.caps, self.hmax, other)
        if not isinstance(other, HLaurent):
            return NotImplemented
        return (
            self.caps == other.caps
            and self.hmax == other.hmax
            and self.coeffs == other.coeffs
        )

    def specialize(self, values: dict) -> "HLaurent":
        out = HLaurent(self.caps, self.hmax)
        out.coeffs = {
            k: v
            for k, s in self.coeffs.items()
            if not (v := s.specialize(values)).is_zero()
        }
        return out

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(
            f"hbar^{k}*[{s!r}]" for k, s in sorted(self.coeffs.items())
        )

    def to_json_obj(self) -> list:
        out = []
        for k in sorted(self.coeffs):
            for rec in self.coeffs[k].to_json_obj():
                exp = dict(rec["exp"])
                if k:
                    exp["hbar"] = k
                rec2 = dict(rec)
                rec2["exp"] = exp
                out.append(rec2)
        out.sort(key=lambda r: sorted(r["exp"].items()))
        return out


def hl_exp(a: HLaurent) -> HLaurent:
    """exp of a Laurent series supported in strictly positive hbar powers."""
    m = a.min_exp()
    if m is not None and m < 1:
        raise ConfigError("hl_exp needs strictly positive hbar support")
    acc = HLaurent.const(a.caps, a.hmax, 1)
    pw = HLaurent.const(a.caps, a.hmax, 1)
    k = 1
    while True:
        pw = pw * a
        if pw.is_zero():
            break
        acc = acc + pw * Fraction(1, factorial(k))
        k += 1
    return acc
