"""Local orbital integrals at finite places: closed forms, the bound for ramified
characters, and a finite-sum oracle for the defining double integral."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cyclo import Cyclo, root_of_unity
from .exactnum import ExactScalar
from .localfield import (
    PadicElem,
    PrecisionExhausted,
    QElem,
    QuadExt,
    quotient_reps,
)
from .pairs import VOL_U, PlaceData, TestFunction, MismatchedPlaceKind, build_test_function

__all__ = [
    "NotClosedForm",
    "SupportNotCertified",
    "VOL_FE",
    "VOL_UE",
    "VOL_E1",
    "RegularOrbitPoint",
    "OrbitalValue",
    "singular_orbital_local",
    "singular_orbital_oracle",
    "regular_orbital_closed",
    "regular_orbital_oracle",
    "ramified_bound",
    "vanishing_threshold",
    "realize_norm",
]


class NotClosedForm(ValueError):
    pass


class SupportNotCertified(RuntimeError):
    pass


VOL_FE = ExactScalar.symbol("vol(F^x\\E^x)")
VOL_UE = ExactScalar.symbol("vol(U\\U_E)")
VOL_E1 = ExactScalar.symbol("vol(E^1capU_E)")

_SPLITTING_KIND = {"inert": "unramified", "ramified": "ramified", "split": "split"}


def _vp(x: Fraction, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of 0")
    v, num, den = 0, x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _unit_part(x: Fraction, p: int) -> Fraction:
    return x / Fraction(p) ** _vp(x, p)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitalValue:
    """coeff * unit where coeff is cyclotomic and unit a monomial in volume symbols."""

    coeff: Cyclo
    unit: ExactScalar
    splitting: str
    kind: str = "exact"

    def normalized(self) -> tuple[Cyclo, ExactScalar]:
        """Rewrite in vol(F^x\\E^x) (non-split) or vol(U_v) (split) and fold rationals into coeff."""
        if self.splitting == "split":
            b = {"vol(U\\U_E)": VOL_U, "vol(E^1capU_E)": VOL_U}
        else:
            e = 2 if self.splitting == "ramified" else 1
            b = {"vol(U\\U_E)": VOL_FE * Fraction(1, e), "vol(E^1capU_E)": VOL_FE}
        u = self.unit.subs(b)
        if u.is_zero() or self.coeff.is_zero():
            return Cyclo.rational(0), ExactScalar.rational(0)
        if not u.is_monomial():
            raise ValueError("volume factor is not a monomial")
        ((d, n, syms), c), = u.terms.items()
        return self.coeff * c, ExactScalar({(d, n, syms): 1})

    def same_as(self, other: "OrbitalValue") -> bool:
        a, ua = self.normalized()
        b, ub = other.normalized()
        if a.is_zero() or b.is_zero():
            return a.is_zero() and b.is_zero()
        return a == b and ua == ub

    def is_zero(self) -> bool:
        return self.normalized()[0].is_zero()

    def to_complex(self, bindings: dict[str, float]) -> complex:
        return self.coeff.to_complex() * self.unit.to_float(bindings)

    def as_exact(self) -> ExactScalar:
        return self.unit * self.coeff.as_fraction()

    def __str__(self):
        c, u = self.normalized()
        tag = "<= " if self.kind == "upper_bound" else ""
        return f"{tag}({c}) * {u}"

    def to_json(self) -> dict:
        c, u = self.normalized()
        z = c.to_complex()
        return {
            "kind": self.kind,
            "coeff": str(c),
            "coeff_float": [z.real, z.imag],
            "unit": str(u),
            "symbolic": str(self.unit * 1) if self.coeff.is_rational() else f"({self.coeff}) * {self.unit}",
        }


def _zero(splitting: str) -> OrbitalValue:
    return OrbitalValue(Cyclo.rational(0), ExactScalar.rational(0), splitting)


# ---------------------------------------------------------------------------
# Orbit points
# ---------------------------------------------------------------------------


def realize_norm(ext: QuadExt, c: Fraction) -> QElem:
    """Some x in E^x with N(x) = c (raises ValueError when c is not a norm)."""
    p = ext.p
    c = Fraction(c)
    if ext.kind == "split":
        return ext.from_components(c, 1)
    v = _vp(c, p)
    if ext.kind == "unramified":
        if v % 2:
            raise ValueError(f"{c} is not a norm from the unramified extension")
        pre = ext.elem(Fraction(p) ** (v // 2))
        target = _unit_part(c, p)
    else:
        w = ext.uniformizer()
        pre = w ** v if v >= 0 else w.inv() ** (-v)
        target = c / Fraction(ext.n) ** v
    f = ext.base.elem
    tgt = f(target)
    t, n = ext.t, ext.n
    for b in range(p):
        disc = f(t * t * b * b - 4 * n * b * b) + tgt * 4
        if disc.is_inexact_zero or disc.val % 2 or disc.val > 0:
            continue
        try:
            root = disc.sqrt()
        except ValueError:
            continue
        a = (root - f(t * b)) * f(Fraction(1, 2))
        u = ext.elem(a, f(b))
        return pre * u
    raise ValueError(f"{c} is not a norm from E")


@dataclass(frozen=True)
class RegularOrbitPoint:
    """A regular orbit xi (xi != 0, 1) at one place; realized as xi = eps N(x)."""

    xi: Fraction
    choice: int = 0

    def __post_init__(self):
        if self.xi in (0, 1):
            raise ValueError("xi must differ from 0 and 1")

    def v_xi(self, p: int) -> int:
        return _vp(Fraction(self.xi), p)

    def v_one_minus_xi(self, p: int) -> int:
        return _vp(1 - Fraction(self.xi), p)

    def k(self, p: int) -> Fraction:
        return Fraction(self.v_one_minus_xi(p), 2)

    def realize(self, ext: QuadExt, eps: Fraction) -> QElem:
        """x with eps N(x) = xi; ``choice`` selects a different realization x z (N z = 1)."""
        base = realize_norm(ext, Fraction(self.xi) / Fraction(eps))
        if self.choice == 0:
            return base
        p = ext.p
        if ext.kind == "split":
            j = self.choice
            u = (j % (p - 1)) + 1 if p > 2 else 1
            shift = Fraction(p) ** (j // (p - 1) % 3 - 1)
            return base * ext.from_components(shift * u, 1 / (shift * u))
        e1 = quotient_reps(ext, "E1_mod_UEn", 2)
        return base * e1[self.choice % len(e1)]


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _splitting(place: PlaceData) -> str:
    return place.splitting


def _L1eta(place: PlaceData) -> Fraction:
    q = place.p
    return {"inert": Fraction(q, q + 1), "ramified": Fraction(1), "split": Fraction(q, q - 1)}[place.splitting]


def _check(place: PlaceData, tf: TestFunction):
    expect = {"sigma1": "sigma1", "sigma2": "sigma2", "sigma3": "sigma3", "other": "gp"}.get(place.cls)
    if place.cls == "inf" or expect != tf.kind:
        raise MismatchedPlaceKind(f"test function {tf.kind} does not fit place class {place.cls}")


def singular_orbital_local(place: PlaceData, tf: TestFunction) -> OrbitalValue:
    """I(0, f'_v) in volume symbols."""
    _check(place, tf)
    s = _splitting(place)
    one = Cyclo.rational(1)
    if place.cls in ("sigma1", "sigma2", "sigma3"):
        return OrbitalValue(one, VOL_FE, s)
    n = tf.n_omega
    factor = Fraction(1) if n == 0 else Fraction(1, place.p ** n) * _L1eta(place)
    return OrbitalValue(Cyclo.rational(factor), VOL_UE, s)


def vanishing_threshold(place: PlaceData, tf: TestFunction) -> int:
    """v(d_{E/F} c(Omega_v)) at a place outside Ram(D) and Sigma3."""
    vd = 1 if place.splitting == "ramified" else 0
    return vd + tf.omega.conductor_exponent_c()


def regular_orbital_closed(place: PlaceData, tf: TestFunction, pt: RegularOrbitPoint) -> OrbitalValue:
    """I(xi, f'_v) from the closed-form tables."""
    _check(place, tf)
    s = _splitting(place)
    p = place.p
    vxi, v1 = pt.v_xi(p), pt.v_one_minus_xi(p)
    if place.cls in ("sigma1", "sigma2", "sigma3"):
        return OrbitalValue(Cyclo.rational(1), VOL_FE ** 2, s) if vxi >= 1 else _zero(s)
    if v1 > vanishing_threshold(place, tf):
        return _zero(s)
    if tf.n_omega > 0:
        raise NotClosedForm("n(Omega_v) > 0: only the bound is available (use ramified_bound)")
    if s != "split":
        vd = 1 if s == "ramified" else 0
        if v1 > vd:
            return _zero(s)
        tab = Fraction(1) if v1 <= 0 else Fraction(1, 2)
        pref = Cyclo.rational(1)
        if s == "ramified":
            # Omega(w_E^{v_E(1-xi)/2}) = Omega(w_E)^{v(1-xi)}
            pref = root_of_unity(tf.omega(tf.ext.uniformizer()) * v1)
        return OrbitalValue(pref * tab, VOL_UE * VOL_FE, s)
    unit = VOL_U ** 2
    if v1 > 0:
        return _zero(s)
    if v1 == 0:
        return OrbitalValue(Cyclo.rational(1 + vxi), unit, s)
    ext, om = tf.ext, tf.omega
    total = Cyclo.rational(0)
    for l in range(abs(vxi) + 1):
        total = total + root_of_unity(om(ext.from_components(Fraction(p) ** (2 * l), 1)))
    return OrbitalValue(root_of_unity(om(ext.from_components(Fraction(pt.xi), 1))) * total, unit, s)


def ramified_bound(place: PlaceData, tf: TestFunction, pt: RegularOrbitPoint, C: Fraction = Fraction(1)) -> OrbitalValue:
    """Upper bound for |I(xi, f'_v)| when n(Omega_v) > 0.

    C is the constant C(E_v, F_v); it equals 1 when v is unramified in E and is
    a configurable (unverified) constant otherwise.
    """
    _check(place, tf)
    n = tf.n_omega
    if n <= 0:
        raise ValueError("the bound is stated for n(Omega_v) > 0")
    q = place.p
    s = _splitting(place)
    if s != "ramified":
        C = Fraction(1)
    L = _L1eta(place)
    pref = ExactScalar.rational(Fraction(1, q ** n) * L * C) * VOL_UE * VOL_E1
    k2 = pt.v_one_minus_xi(q)  # k = k2 / 2
    if k2 > 0:
        tail = ExactScalar.sqrt(Fraction(1, q ** k2)) * L
    elif s != "split":
        tail = ExactScalar.rational(1)
    else:
        tail = ExactScalar.rational(1 + abs(pt.v_xi(q)))
    return OrbitalValue(Cyclo.rational(1), pref * tail, s, "upper_bound")


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


def _eps_of(tf: TestFunction) -> Fraction:
    return Fraction(tf.model.eps_f.unit * tf.model.eps_f.p ** tf.model.eps_f.val)


def _split_window(n: int, k: int, v1: int, v2: int) -> list[tuple[int, int]]:
    """(a, b) = (v(t1), v(t2)) pairs outside of which f'(t1 gamma t2) = 0.

    For g = lambda t1 gamma t2 in R^x one needs a+b+k even and
        k - 2n <= a + b <= 2n - k,   k - 2 v1 - 2n <= a - b <= 2 v2 + 2n - k,
    where v1, v2 are the valuations of the components of x.
    """
    out = []
    lo_s, hi_s = k - 2 * n, 2 * n - k
    lo_d, hi_d = k - 2 * v1 - 2 * n, 2 * v2 + 2 * n - k
    for s in range(lo_s, hi_s + 1):
        if (s + k) % 2:
            continue
        for d in range(lo_d, hi_d + 1):
            if (s + d) % 2:
                continue
            out.append(((s + d) // 2, (s - d) // 2))
    return out


def _accumulate(counter: Counter) -> Cyclo:
    total = Cyclo.rational(0)
    by_den: dict[int, dict[int, int]] = {}
    for ex, c in counter.items():
        d = ex.denominator
        by_den.setdefault(d, {})
        by_den[d][ex.numerator] = by_den[d].get(ex.numerator, 0) + c
    for d, exps in by_den.items():
        total = total + Cyclo.from_exponents(d, exps)
    return total


def _rebuild(place: PlaceData, tf: TestFunction, M: Optional[int]) -> TestFunction:
    if M is None or M == tf.ext.M:
        return tf
    arg = tf.pair if tf.pair is not None else (tf.omega if tf.kind == "gp" else None)
    return build_test_function(place, arg, M)


def regular_orbital_oracle(place: PlaceData, tf: TestFunction, pt: RegularOrbitPoint, M: Optional[int] = None) -> OrbitalValue:
    """I(xi, f'_v) as the finite sum over (t1, t2) in (E^x / F^x U_E^r)^2.

    I = int int f'(t1 gamma(x) t2) Omega(t1 t2) dt1 dt2, and the integrand is
    constant on cells of level r = tf.cell_level, each of volume vol/|cells|.
    """
    _check(place, tf)
    tf = _rebuild(place, tf, M)
    ext, model, om = tf.ext, tf.model, tf.omega
    r = tf.cell_level
    if r > ext.M - 1:
        raise PrecisionExhausted(f"cell level {r} exceeds working precision {ext.M}")
    s = _splitting(place)
    x = pt.realize(ext, _eps_of(tf))
    gam = model.gamma(x)
    counter: Counter = Counter()
    if s != "split":
        reps = quotient_reps(ext, "Ex_mod_Fx_UEn", r)
        for t1 in reps:
            T1 = model.torus(t1)
            left = T1 * gam
            for t2 in reps:
                val = tf.evaluate(left * model.torus(t2))
                if val is not None:
                    counter[(val + om(t1 * t2)) % 1] += 1
        coeff = _accumulate(counter) * Fraction(1, len(reps) ** 2)
        return OrbitalValue(coeff, VOL_FE ** 2, s)
    p = ext.p
    c1, c2 = x.components()
    v1, v2 = c1.valuation(), c2.valuation()
    n = tf.n_omega
    pairs = _split_window(n, pt.v_one_minus_xi(p), v1, v2)
    W = max((max(abs(a), abs(b)) for a, b in pairs), default=0)
    if W > ext.M - 1:
        raise SupportNotCertified(f"support window {W} exceeds precision {ext.M}")
    units = [u for u in range(1, p ** r) if u % p]
    elems = {
        a: [ext.from_components(Fraction(p) ** a * u, 1) for u in units]
        for a in {a for a, _ in pairs} | {b for _, b in pairs}
    }
    for a, b in pairs:
        for t1 in elems[a]:
            left = model.torus(t1) * gam
            for t2 in elems[b]:
                val = tf.evaluate(left * model.torus(t2))
                if val is not None:
                    counter[(val + om(t1 * t2)) % 1] += 1
    coeff = _accumulate(counter) * Fraction(1, len(units) ** 2)
    return OrbitalValue(coeff, VOL_U ** 2, s)


def singular_orbital_oracle(place: PlaceData, tf: TestFunction, M: Optional[int] = None) -> OrbitalValue:
    """I(0, f'_v) = int f'(t) Omega(t) dt as a finite sum over E^x / F^x U_E^r."""
    _check(place, tf)
    tf = _rebuild(place, tf, M)
    ext, model, om = tf.ext, tf.model, tf.omega
    r = tf.cell_level
    s = _splitting(place)
    counter: Counter = Counter()
    if s != "split":
        reps = quotient_reps(ext, "Ex_mod_Fx_UEn", r)
        for t in reps:
            val = tf.evaluate(model.torus(t))
            if val is not None:
                counter[(val + om(t)) % 1] += 1
        return OrbitalValue(_accumulate(counter) * Fraction(1, len(reps)), VOL_FE, s)
    # t = (p^a u, 1) lies in Z R^x only if a is even and |a| <= 2n
    p = ext.p
    n = tf.n_omega
    units = [u for u in range(1, p ** r) if u % p]
    for a in range(-2 * n, 2 * n + 1):
        for u in units:
            t = ext.from_components(Fraction(p) ** a * u, 1)
            val = tf.evaluate(model.torus(t))
            if val is not None:
                counter[(val + om(t)) % 1] += 1
    # vol(U\U_E) = vol(U_v) here; each cell has volume vol(U_v) / |units|
    return OrbitalValue(_accumulate(counter) * Fraction(1, len(units)), VOL_UE, s)
