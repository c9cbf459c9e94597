"""The maps spectral curve and Eynard-Orantin topological recursion.

One residue engine serves both arithmetic modes.  A branch-point chart
supplies jets for the running point Z(s), its deck image, their
derivatives, and the recursion-kernel denominator:

* exact ordinary mode: branch points are z = +-1 for every t, the deck
  transformation is globally z -> 1/z, and the local parameter is
  s = z - p, all over exact series coefficients;
* numeric mode (either side): branch points are float roots of the base
  function's derivative and the chart is the standard square-root
  parameter, base(Z(s)) = base(p) + s^2, so the deck map is s -> -s.

Stable correlators are stored in the pole basis: a map from per-slot
(branch point, order) assignments to coefficients.  The projection
property is built into that representation; the loop-equation checks
re-derive it independently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError, DegenerateCurve, NoConvergence
from .ratfun import Jet, ZPoly, ZRat, ring_inv, ring_is_zero
from .series import PSeries, divide_diff, revert_series

# ---------------------------------------------------------------------------
# curve construction


def _one_like(x):
    return PSeries.const(x.caps, 1) if isinstance(x, PSeries) else x * 0 + 1


def _laurent_x_power(alpha, gamma, j: int) -> dict:
    """Laurent coefficients in z of x(z)^j, x = alpha + gamma (z + 1/z)."""
    base = {0: alpha, 1: gamma, -1: gamma}
    out = {0: _one_like(gamma)}
    for _ in range(j):
        new: dict = {}
        for k, c in out.items():
            for d, b in base.items():
                if ring_is_zero(b):
                    continue
                key = k + d
                p = c * b
                new[key] = new[key] + p if key in new else p
        out = new
    return out


def _v_laurent(alpha, gamma, t_values: dict) -> dict:
    """Laurent coefficients of V(z) = x - sum_k t_k x^(k-1) at x = x(z)."""
    out = dict(_laurent_x_power(alpha, gamma, 1))
    for k, tk in t_values.items():
        if ring_is_zero(tk):
            continue
        for d, c in _laurent_x_power(alpha, gamma, k - 1).items():
            term = c * tk
            out[d] = out.get(d, 0) - term
    return {d: c for d, c in out.items() if not ring_is_zero(c)}


def solve_curve_params(t_values: dict, one, max_iter: int = 60):
    """Solve [z^0]V = 0 and [z^-1]V = 1/gamma near (alpha, gamma) = (0, 1).

    Newton iteration on the pair; works verbatim over truncated series
    (quadratic t-adic convergence) and over floats.  ``one`` is the
    multiplicative unit of the scalar ring.
    """
    alpha = one * 0
    gamma = one
    numeric = not isinstance(one, PSeries)
    for _ in range(max_iter):
        v = _v_laurent(alpha, gamma, t_values)
        f1 = v.get(0, one * 0)
        f2 = v.get(-1, one * 0) - ring_inv(gamma)
        # G := dV/dx = 1 - sum_k t_k (k-1) x^(k-2) as a Laurent dict;
        # dV/dalpha = G, dV/dgamma = (z + 1/z) G
        gdict = {0: _one_like(gamma)}
        for k, tk in t_values.items():
            if ring_is_zero(tk) or k < 2:
                continue
            for d, c in _laurent_x_power(alpha, gamma, k - 2).items():
                term = c * tk * (k - 1)
                gdict[d] = gdict.get(d, 0) - term
        zero = one * 0
        j11 = gdict.get(0, zero)
        j12 = gdict.get(-1, zero) + gdict.get(1, zero)
        j21 = gdict.get(-1, zero)
        j22 = gdict.get(-2, zero) + gdict.get(0, zero) + ring_inv(gamma * gamma)
        det_inv = ring_inv(j11 * j22 - j12 * j21)
        da = (f1 * j22 - f2 * j12) * det_inv
        dg = (f2 * j11 - f1 * j21) * det_inv
        alpha = alpha - da
        gamma = gamma - dg
        if numeric:
            if abs(complex(f1)) + abs(complex(f2)) < 1e-13:
                return alpha, gamma
        else:
            if ring_is_zero(da) and ring_is_zero(dg):
                return alpha, gamma
    if numeric:
        raise NoConvergence("curve parameter Newton did not converge")
    return alpha, gamma


@dataclass
class CurveData:
    """X, w, y on CP^1 with the implicit-equation parameters."""

    alpha: object
    gamma: object
    X: ZRat
    w: ZRat
    y: ZRat
    t_values: dict
    one: object

    @classmethod
    def build(cls, t_values: dict, one=Fraction(1)) -> "CurveData":
        alpha, gamma = solve_curve_params(t_values, one)
        v = _v_laurent(alpha, gamma, t_values)
        top = max((d for d in v if d > 0), default=1)
        wpoly = ZPoly([v.get(d, one * 0) for d in range(0, top + 1)])
        # X = z / (alpha z + gamma (1 + z^2))
        den = ZPoly([gamma, alpha, gamma])
        X = ZRat(ZPoly([one * 0, one]), den)
        w = ZRat.from_poly(wpoly)
        # y = w/X - 1 = (w/z) * (alpha z + gamma(1+z^2)) - 1, a polynomial
        y = w / X - ZRat.const(one)
        return cls(alpha, gamma, X, w, y, t_values, one)

    def base(self, side: str) -> ZRat:
        return self.X if side == "ordinary" else self.w

    def eta(self, side: str) -> ZRat:
        b = self.base(side)
        return self.y * b.diff() / b

    def check_identities(self) -> dict:
        """w = X(1+y), [z^0]V = 0, [z^-1]V = 1/gamma, dX zeros at +-1."""
        v = _v_laurent(self.alpha, self.gamma, self.t_values)
        one = self.one
        res = {}
        res["w_eq_X_one_plus_y"] = self.w == self.X * (self.y + ZRat.const(one))
        res["v_z0"] = ring_is_zero(v.get(0, one * 0))
        gap = v.get(-1, one * 0) - ring_inv(self.gamma)
        res["v_zm1"] = ring_is_zero(gap)
        dxnum = (self.X.diff()).num
        # numerator of X' is gamma(1 - z^2) (up to denominator squares)
        q = dxnum.try_exact_divide(ZPoly([one, one * 0, -one]))
        res["dx_zeros_pm1"] = q is not None and q.degree == 0
        return res


# ---------------------------------------------------------------------------
# branch-point charts


@dataclass
class Chart:
    point: object
    Z: Jet          # running point as a jet in the local parameter
    Zt: Jet         # deck image of the running point
    Zp: Jet         # dZ/ds
    Ztp: Jet        # d(deck Z)/ds
    inv_den: Jet    # 1 / (2 (eta(Z) Z' - eta(Zt) Zt'))
    Zm: Jet = None  # Z - p
    Ztm: Jet = None


def exact_charts(curve: CurveData, top: int) -> list:
    """Charts at z = +-1 with the global deck map z -> 1/z (exact mode)."""
    eta = curve.eta("ordinary")
    charts = []
    one = curve.one
    for p in (Fraction(1), Fraction(-1)):
        pj = Jet.from_scalar(one * p, top)
        Z = pj + Jet.variable(top, one)
        Zt = Z.inv()
        Zp = Jet.from_scalar(one, top - 1)
        Ztp = Zt.diff()
        den = (eta.eval(Z) * Zp - eta.eval(Zt) * Ztp) * 2
        charts.append(
            Chart(
                point=one * p,
                Z=Z,
                Zt=Zt,
                Zp=Zp,
                Ztp=Ztp,
                inv_den=den.inv(),
                Zm=Z - one * p,
                Ztm=Zt - one * p,
            )
        )
    return charts


def numeric_branch_points(base: ZRat, tol: float = 1e-9) -> list:
    """Finite simple critical points of the base function (float mode)."""
    import numpy as np

    dnum = base.diff().num
    coeffs = [complex(c) for c in dnum.coeffs]
    roots = np.roots(list(reversed(coeffs)))
    pts = []
    for r in roots:
        r = complex(r)
        if abs(r.imag) < tol:
            r = complex(r.real, 0.0)
        pts.append(r)
    # simplicity: pairwise distinct
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            if abs(a - b) < 1e-6:
                raise DegenerateCurve("non-simple critical point detected")
    pts.sort(key=lambda c: (round(c.real, 9), round(c.imag, 9)))
    return pts


def jet_chop(j: Jet, rel: float = 1e-10) -> Jet:
    """Zero out float coefficients that are roundoff relative to the peak.

    Needed where a jet has *structural* zeros (e.g. the double zero of
    the recursion-kernel denominator): 1e-17 junk in a leading slot
    would otherwise poison the inversion.
    """
    if not j.coeffs:
        return j
    peak = max(abs(complex(c)) for c in j.coeffs)
    if peak == 0.0:
        return Jet(j.minexp, j.top, [])
    cut = peak * rel
    cs = [0 if abs(complex(c)) < cut else c for c in j.coeffs]
    return Jet(j.minexp, j.top, cs)


def numeric_charts(curve: CurveData, side: str, top: int) -> list:
    """Square-root charts base(Z(s)) = base(p) + s^2 at each critical point."""
    base = curve.base(side)
    eta = curve.eta(side)
    pts = numeric_branch_points(base)
    charts = []
    for p in pts:
        b0 = base.eval_scalar(p)
        d2 = _second_derivative(base, p)
        if abs(d2) < 1e-12:
            raise DegenerateCurve("vanishing second derivative at branch point")
        a1 = cmath.sqrt(2.0 / d2)
        # order-by-order solve of base(p + u) = b0 + s^2: after fixing
        # a_1..a_{r-2}, the s^r residual determines a_{r-1} through the
        # scalar 2 c2 a1 (no jet divisions, windows stay intact)
        coeffs = [p, a1] + [0.0] * (top - 1)
        c2a1 = d2 * a1  # = 2 c2 a1
        s2 = Jet.variable(top + 2, 1.0 + 0j) ** 2
        for r in range(3, top + 2):
            Z = Jet(0, top + 2, list(coeffs))
            f = base.eval(Z) - b0 - s2
            fr = f.coeff(r) if f.minexp <= r <= f.top else 0.0
            coeffs[r - 1] = coeffs[r - 1] - fr / c2a1
        Z = Jet(0, top, list(coeffs))
        Zt = Z.flip()
        Zp = Z.diff()
        Ztp = Zt.diff()
        den = jet_chop((eta.eval(Z) * Zp - eta.eval(Zt) * Ztp) * 2)
        charts.append(
            Chart(
                point=p,
                Z=Z,
                Zt=Zt,
                Zp=Zp,
                Ztp=Ztp,
                inv_den=den.inv(),
                Zm=Z - p,
                Ztm=Zt - p,
            )
        )
    return charts


def _second_derivative(f: ZRat, p):
    return f.diff().diff().eval_scalar(p)


# ---------------------------------------------------------------------------
# the recursion engine


class TRContext:
    """Runs the recursion and stores stable correlators in pole-basis form.

    tables[(g, n)] maps assignments (a tuple of (branch index, order) per
    slot) to scalar coefficients: omega_{g,n} = sum c_A prod_i
    1/(z_i - p_{A_i})^{k_{A_i}} (times dz factors, kept implicit).
    """

    def __init__(self, curve: CurveData, side: str, mode: str, gmax: int, nmax: int):
        self.curve = curve
        self.side = side
        self.mode = mode
        # window: max pole order 6g-4+2n plus kernel/denominator slack;
        # the residue extraction hard-fails if this is ever too small
        top = 6 * gmax + 2 * nmax + 8
        self.top = top
        if mode == "exact":
            if side != "ordinary":
                raise ConfigError(
                    "exact recursion is implemented on the ordinary side only"
                )
            self.charts = exact_charts(curve, top)
        else:
            self.charts = numeric_charts(curve, side, top)
        self.points = [ch.point for ch in self.charts]
        self.tables: dict = {}
        self._basis_cache: dict = {}

    # -- jets of pole-basis functions at the running point ----------------

    def _basis_jet(self, ci: int, qi: int, order: int, tilde: bool) -> Jet:
        key = (ci, qi, order, tilde)
        j = self._basis_cache.get(key)
        if j is None:
            ch = self.charts[ci]
            q = self.points[qi]
            zj = ch.Zt if tilde else ch.Z
            j = (zj - q).inv() ** order
            self._basis_cache[key] = j
        return j

    def _b_kernel_running(self, ci: int) -> Jet:
        """B(Z, Zt) including the deck-leg Jacobian: 1/(Z-Zt)^2 * Zt'."""
        ch = self.charts[ci]
        return (ch.Z - ch.Zt).inv() ** 2 * ch.Ztp

    def _b_spectator(self, ci: int, tilde: bool, max_k: int):
        """Expansion of 1/(Z - z_i)^2 in the spectator pole basis.

        Returns a list of (order, jet): 1/(Z - z)^2 = sum_k (k+1)
        (Z-p)^k / (z-p)^(k+2).
        """
        ch = self.charts[ci]
        zm = ch.Ztm if tilde else ch.Zm
        out = []
        pw = Jet.from_scalar(_one_like(self.curve.one), self.top)
        for k in range(max_k + 1):
            out.append((k + 2, pw * (k + 1)))
            pw = pw * zm
        return out

    # -- the recursion ------------------------------------------------------

    def omega(self, g: int, n: int) -> dict:
        if 2 * g - 2 + n <= 0:
            raise ConfigError("omega tables hold stable (g,n) only")
        key = (g, n)
        if key not in self.tables:
            self._compute(g, n)
        return self.tables[key]

    def ensure(self, g: int, n: int):
        """Warm the table up to (g, n); the recursion resolves its own
        dependencies lazily so this is just a convenience entry point."""
        self.omega(g, n)

    def _compute(self, g: int, n: int):
        spect = n - 1  # spectator slots
        table: dict = {}
        for ci in range(len(self.charts)):
            self._add_residues(table, ci, g, spect)
        self.tables[(g, n)] = table

    def _add_residues(self, table: dict, ci: int, g: int, spect: int):
        ch = self.charts[ci]
        e_terms = self._assemble_e(ci, g, spect)
        jac = ch.Zp  # the non-deck running leg Jacobian, shared by all terms
        for spec_assign, ejet in e_terms.items():
            r = ejet * jac * ch.inv_den
            if self.mode == "numeric":
                r = jet_chop(r, 1e-12)
            if not r.coeffs:
                continue
            kmax = -r.minexp - 1
            if kmax < 1:
                continue
            zm_pow = ch.Zm  # (Z - p)^k, k starting at 1
            ztm_pow = ch.Ztm
            for k in range(1, kmax + 1):
                nk = zm_pow - ztm_pow
                c = (nk * r).coeff(-1)
                if not ring_is_zero(c):
                    key = ((ci, k + 1),) + spec_assign
                    table[key] = table[key] + c if key in table else c
                zm_pow = zm_pow * ch.Zm
                ztm_pow = ztm_pow * ch.Ztm

    def _assemble_e(self, ci: int, g: int, spect: int) -> dict:
        """The bracket of the recursion as {spectator assignment: jet}.

        Every term carries the deck-leg Jacobian Zt' exactly once (the
        plain-leg Zp is factored out globally by the caller).
        """
        ch = self.charts[ci]
        acc: dict = {}

        def add(assign, jet):
            acc[assign] = acc[assign] + jet if assign in acc else jet

        # omega_{g-1, n+1 more slots}: first two slots at Z and Zt
        if g >= 1:
            if g - 1 == 0 and spect == 0:
                add((), self._b_kernel_running(ci))
            else:
                sub = self.omega(g - 1, spect + 2)
                for assign, c in sub.items():
                    (q0, k0), (q1, k1) = assign[0], assign[1]
                    jet = (
                        self._basis_jet(ci, q0, k0, False)
                        * self._basis_jet(ci, q1, k1, True)
                        * ch.Ztp
                        * c
                    )
                    add(tuple(assign[2:]), jet)

        # split terms: omega_{g1,|I|+1}(Z, z_I) omega_{g2,|J|+1}(Zt, z_J)
        for g1 in range(g + 1):
            g2 = g - g1
            for mask in range(1 << spect):
                i_set = [i for i in range(spect) if mask >> i & 1]
                j_set = [i for i in range(spect) if not mask >> i & 1]
                if (
                    self._factor_kind(g1, len(i_set)) is None
                    or self._factor_kind(g2, len(j_set)) is None
                ):
                    continue
                parts1 = self._factor_terms(ci, g1, i_set, tilde=False)
                parts2 = self._factor_terms(ci, g2, j_set, tilde=True)
                for a1, j1 in parts1:
                    for a2, j2 in parts2:
                        assign = [None] * spect
                        for idx, val in zip(i_set, a1):
                            assign[idx] = val
                        for idx, val in zip(j_set, a2):
                            assign[idx] = val
                        add(tuple(assign), j1 * j2 * ch.Ztp)
        return acc

    @staticmethod
    def _factor_kind(gg: int, n_spect: int):
        """None if the factor is excluded (the omega_{0,1} legs)."""
        if gg == 0 and n_spect == 0:
            return None
        return "kernel" if (gg == 0 and n_spect == 1) else "stable"

    def _factor_terms(self, ci: int, gg: int, idxs: list, tilde: bool):
        """[(assignment-for-idxs, jet)] for one recursion factor."""
        kind = self._factor_kind(gg, len(idxs))
        if kind is None:
            return None
        if kind == "kernel":
            pairs = []
            for order, jet in self._b_spectator(ci, tilde, self._kernel_depth()):
                pairs.append((((ci, order),), jet))
            return pairs
        sub = self.omega(gg, len(idxs) + 1)
        out = []
        for assign, c in sub.items():
            q0, k0 = assign[0]
            jet = self._basis_jet(ci, q0, k0, tilde) * c
            out.append((tuple(assign[1:]), jet))
        return out

    def _kernel_depth(self) -> int:
        return self.top - 2

    # -- reports -------------------------------------------------------------

    def residues_vanish(self, g: int, n: int, tol: float = 0.0) -> bool:
        """No simple poles at branch points (residue-free forms)."""
        table = self.omega(g, n)
        for assign, c in table.items():
            if any(k == 1 for _, k in assign):
                if tol == 0.0:
                    if not ring_is_zero(c):
                        return False
                elif abs(complex(c)) > tol:
                    return False
        return True

    def symmetric(self, g: int, n: int, tol: float = 0.0) -> bool:
        table = self.omega(g, n)
        import itertools

        for assign, c in table.items():
            for perm in itertools.permutations(assign):
                ref = table.get(perm)
                if ref is None:
                    if tol == 0.0:
                        if not ring_is_zero(c):
                            return False
                    elif abs(complex(c)) > tol:
                        return False
                    continue
                gap = c - ref
                if tol == 0.0:
                    if not ring_is_zero(gap):
                        return False
                elif abs(complex(gap)) > tol:
                    return False
        return True


# ---------------------------------------------------------------------------
# expansions at the origin in the base coordinate


def _poly_series(p: ZPoly, var: str, caps: dict) -> PSeries:
    out = PSeries.zero(caps)
    deg_cap = caps[var] if var in caps else caps[var[0]]
    for k, c in enumerate(p.coeffs):
        if k > deg_cap:
            break
        if ring_is_zero(c):
            continue
        cc = c.truncate_to(caps) if isinstance(c, PSeries) else PSeries.const(caps, c)
        out = out + (cc if k == 0 else cc * PSeries.var(caps, var, k))
    return out


def zrat_series(r: ZRat, var: str, caps: dict) -> PSeries:
    """Power-series expansion of a rational function at z = 0."""
    rr = ZRat(r.num, r.den)
    rr._reduce_monomials()
    num = _poly_series(rr.num, var, caps)
    den = _poly_series(rr.den, var, caps)
    return num * den.invert()


class OriginExpander:
    """Re-expands pole-basis correlators as series in the base coordinate.

    The base function (X on the ordinary side, w on the fully simple
    side) is a local coordinate at z = 0; its reversion turns every slot
    of an omega table into a power series, and W_{g,n} is read off after
    stripping the d log(base) factors (and the (0,2) double pole).
    """

    def __init__(self, ctx: TRContext, cap: int, extra_caps: dict | None = None):
        self.ctx = ctx
        self.cap = cap
        # internal padding: divided-difference inversions lose exactness
        # at the top degrees, which must stay above the reported cap
        self.icap = cap + 4
        curve = ctx.curve
        caps = dict(extra_caps or {})
        caps["zz"] = self.icap
        caps.setdefault("x", self.icap)
        caps.setdefault("w", self.icap)
        self.caps = caps
        base = curve.base(ctx.side)
        self.base_series = zrat_series(base, "zz", caps)
        self.zed = revert_series(self.base_series, "zz")
        # F = base/base' as a series in z, then composed with z(base)
        f = base / base.diff()
        self.prefactor = zrat_series(f, "zz", caps).subst("zz", self.zed)
        self.y_series = zrat_series(curve.y, "zz", caps).subst("zz", self.zed)
        self._slot_cache: dict = {}

    def _lift(self, scalar) -> PSeries:
        if isinstance(scalar, PSeries):
            return scalar.truncate_to(self.caps)
        return PSeries.const(self.caps, scalar)

    def _slot_series(self, qi: int, k: int) -> PSeries:
        key = (qi, k)
        s = self._slot_cache.get(key)
        if s is None:
            zmp = self.zed - self._lift(self.ctx.points[qi])
            s = self.prefactor * (zmp.invert() ** k)
            self._slot_cache[key] = s
        return s

    def w_series(self, g: int, n: int, var_prefix: str = "x") -> PSeries:
        """W_{g,n} as a series in <prefix>1..<prefix>n (stable and (0,1),
        (0,2) cases), matching the Fock-side conventions."""
        out_caps = {
            k: v for k, v in self.caps.items() if k not in ("zz", "x", "w")
        }
        out_caps[var_prefix] = self.cap
        if (g, n) == (0, 1):
            return self.y_series.rename("zz", f"{var_prefix}1").truncate_to(out_caps)
        if (g, n) == (0, 2):
            return self._w02_series(var_prefix, out_caps)
        table = self.ctx.omega(g, n)
        total = PSeries.zero(out_caps)
        for assign, c in table.items():
            prod = None
            for i, (qi, k) in enumerate(assign):
                s = self._slot_series(qi, k).rename("zz", f"{var_prefix}{i + 1}")
                s = s.truncate_to(out_caps)
                prod = s if prod is None else prod * s
            cc = c.truncate_to(out_caps) if isinstance(c, PSeries) else c
            total = total + prod * cc
        return total

    def _w02_series(self, var_prefix: str, out_caps: dict) -> PSeries:
        """The (0,2) case through the divided-difference trick.

        In scalar form W_{0,2}(z1,z2) = x1 x2 [ B(z1,z2)/(X'(z1)X'(z2))
        - 1/(x1-x2)^2 ], composed with z_i = zed(x_i); the double poles
        cancel, leaving an honest series.
        """
        v1, v2 = f"{var_prefix}1", f"{var_prefix}2"
        caps_in = {
            k: v for k, v in self.caps.items() if k not in ("zz", "x", "w")
        }
        caps_in[var_prefix] = self.icap
        zed1 = self.zed.rename("zz", v1).truncate_to(caps_in)
        zed2 = self.zed.rename("zz", v2).truncate_to(caps_in)
        # DD = (zed1 - zed2)/(x1 - x2), a unit series, exact to icap-1
        dd = divide_diff(zed1 - zed2, v1, v2, exact_to=self.icap - 1)
        base = self.ctx.curve.base(self.ctx.side)
        bp = zrat_series(base.diff(), "zz", self.caps).subst("zz", self.zed)
        bp1 = bp.rename("zz", v1).truncate_to(caps_in)
        bp2 = bp.rename("zz", v2).truncate_to(caps_in)
        bracket = dd.invert() ** 2 * (bp1 * bp2).invert() - 1
        tol = 0.0 if self.ctx.mode == "exact" else 1e-9
        quot = divide_diff(bracket, v1, v2, exact_to=self.icap - 2, tol=tol)
        quot = divide_diff(quot, v1, v2, exact_to=self.icap - 3, tol=tol)
        return (
            quot * PSeries.var(caps_in, v1) * PSeries.var(caps_in, v2)
        ).truncate_to(out_caps)
