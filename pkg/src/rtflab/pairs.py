"""Admissible pairs of normalized level 0 and 1/2, test functions, local volumes
and closed-form local spectral integrals."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .exactnum import ExactScalar, ONE
from .localfield import (
    FiniteField,
    IwahoriModel,
    LocalFieldDesc,
    PadicElem,
    QElem,
    QuadExt,
    QuatElem,
    QuaternionModel,
    ToricChar,
    unit_normal_form,
    _prime_factors,
)

__all__ = [
    "MismatchedPlaceKind",
    "AdmissiblePair",
    "PlaceData",
    "TestFunction",
    "LambdaChar",
    "enumerate_level0_pairs",
    "enumerate_level_half_pairs",
    "is_admissible",
    "build_test_function",
    "local_volume",
    "local_spectral_value",
    "sigma2_restriction_trace",
    "VOL_U",
    "L2",
    "resolve_local_symbols",
]


class MismatchedPlaceKind(ValueError):
    pass


VOL_U = ExactScalar.symbol("vol(U_v)")
L2 = ExactScalar.symbol("L(2,1_v)")


def _prime_power(q: int) -> tuple[int, int]:
    ps = _prime_factors(q)
    if len(ps) != 1 or ps[0] == 2:
        raise ValueError(f"q = {q} must be an odd prime power")
    p, k = ps[0], 0
    while q > 1:
        q //= p
        k += 1
    return p, k


# ---------------------------------------------------------------------------
# Admissible pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissiblePair:
    """level "0": param = (a,) with a mod q^2-1; level "1/2": param = (sign, beta)."""

    q: int
    level: str
    param: tuple

    def canonical(self) -> "AdmissiblePair":
        if self.level == "0":
            (a,) = self.param
            m = self.q ** 2 - 1
            return AdmissiblePair(self.q, "0", (min(a % m, a * self.q % m),))
        sign, beta = self.param
        p, k = _prime_power(self.q)
        gf = FiniteField(p, k)
        b = beta % self.q if k == 1 else beta
        return AdmissiblePair(self.q, "1/2", (sign, min(b, gf.neg(b))))

    @property
    def label(self) -> str:
        if self.level == "0":
            return f"q{self.q}:L0:a={self.param[0]}"
        sign, beta = self.param
        return f"q{self.q}:L1/2:{'+' if sign == 1 else '-'}:beta={beta}"

    def theta(self, ext: QuadExt) -> ToricChar:
        """The character theta of E_v^x attached to the pair (needs q prime)."""
        if ext.q != self.q:
            raise ValueError("extension residue field does not match the pair")
        if self.level == "0":
            return ToricChar.level0(ext, self.param[0])
        return ToricChar.level_half(ext, *self.param)

    def to_json(self) -> dict:
        return {"q": self.q, "level": self.level, "param": list(self.param), "label": self.label}


def _level0_theta_exp(q: int, a: int, gf: FiniteField, x: int) -> Fraction:
    return Fraction(a * gf.log(x), q * q - 1) % 1


def is_admissible(pair: AdmissiblePair) -> bool:
    """Brute-force admissibility over the finite quotient.

    level 0: theta is trivial on k_F^x and nontrivial on ker(N: k_E^x -> k_F^x);
    level 1/2: beta != 0 and theta on U_E^1/U_E^3 is not constant on the fibres
    of the norm (computed in U_F^1/U_F^2).
    """
    q = pair.q
    p, k = _prime_power(q)
    if pair.level == "0":
        (a,) = pair.param
        gf = FiniteField(p, 2 * k)
        kf = [x for x in gf.subfield(k) if x]
        if any(_level0_theta_exp(q, a, gf, x) != 0 for x in kf):
            return False
        norm_one = [x for x in gf.elements() if x and gf.pow(x, q + 1) == 1]
        return any(_level0_theta_exp(q, a, gf, x) != 0 for x in norm_one)
    sign, beta = pair.param
    if sign not in (1, -1):
        return False
    gf = FiniteField(p, k)
    if beta % q == 0 if k == 1 else beta == 0:
        return False
    # u = 1 + y w + z w^2 (mod U_E^3); N(u) = (1 + z p)^2 - p y^2 = 1 + (2z - y^2) p mod p^2
    fibres: dict[int, set] = {}
    for y in gf.elements():
        th = gf.trace_to_prime(gf.mul(gf.from_int(2), gf.mul(beta % q if k == 1 else beta, y)))
        for z in gf.elements():
            nc = gf.sub(gf.mul(2, z), gf.mul(y, y))
            fibres.setdefault(nc, set()).add(th)
    return any(len(v) > 1 for v in fibres.values())


def enumerate_level0_pairs(q: int) -> list[AdmissiblePair]:
    """Canonical representatives of level-0 pairs: (q-1) | a, (q+1) does not divide a."""
    _prime_power(q)
    m = q * q - 1
    reps = set()
    for a in range(0, m, q - 1):
        if a % (q + 1) == 0:
            continue
        reps.add(AdmissiblePair(q, "0", (a,)).canonical())
    return sorted(reps, key=lambda x: x.param)


def enumerate_level_half_pairs(q: int) -> list[AdmissiblePair]:
    """Canonical representatives of level-1/2 pairs: (sign, beta) with beta ~ -beta."""
    p, k = _prime_power(q)
    reps = set()
    for sign in (1, -1):
        for beta in range(1, q):
            reps.add(AdmissiblePair(q, "1/2", (sign, beta)).canonical())
    return sorted(reps, key=lambda x: (-x.param[0], x.param[1]))


def sigma2_restriction_trace(pair: AdmissiblePair, model: QuaternionModel, t: QElem) -> tuple[Fraction, Fraction]:
    """Character of Ind_{E^x U_D^1}^{D^x} theta at t in E^x, as two exponents.

    Computed as theta(t) + theta(w_D^{-1} t w_D) with the conjugation done in
    the quaternion model; to be compared with theta_a(t) + theta_{aq}(t).
    """
    theta = pair.theta(model.ext)
    w = model.uniformizer()
    w_inv_nrd = w.nrd().inv()
    # w^{-1} = conj-quaternion / Nrd: (alpha, beta)^{-1} = (conj alpha, -beta) / Nrd
    w_inv = QuatElem(model, w.alpha.conj() * model.ext.elem(w_inv_nrd), -w.beta * model.ext.elem(w_inv_nrd))
    conj_t = w_inv * model.torus(t) * w
    zero_beta = conj_t.beta
    if not (zero_beta.a.is_inexact_zero and zero_beta.b.is_inexact_zero):
        raise ArithmeticError("w_D does not normalize E")
    return theta(t), theta(conj_t.alpha)


# ---------------------------------------------------------------------------
# Places and test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaceData:
    """One place of F with its role.

    cls: "inf", "sigma1", "sigma2", "sigma3" or "other";
    splitting: "split", "inert", "ramified" (or "complex" at infinity).
    """

    p: Optional[int]
    cls: str
    splitting: str
    n_omega: int = 0
    k: Optional[int] = None
    m: Optional[int] = None

    @property
    def q(self) -> int:
        return self.p

    @property
    def in_ram_D(self) -> bool:
        return self.cls in ("inf", "sigma1", "sigma2")

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class LambdaChar:
    """The extension Lambda of theta_{+-,2beta} to E^x U_J^1 in the Iwahori model."""

    pair: AdmissiblePair
    iwahori: IwahoriModel

    def alpha_matrix_trace_exp(self, X) -> Fraction:
        """lambda_beta(X) = psi~(Tr(alpha (X - I))), alpha -> p^{-1} [[0, beta], [p beta, 0]]."""
        p = self.iwahori.p
        _, beta = self.pair.param
        f = self.iwahori.ext.base.elem
        one = f(1)
        Y = (X[0] - one, X[1], X[2], X[3] - one)
        A = (f(0), f(Fraction(beta, p)), f(beta), f(0))
        prod = IwahoriModel.mul(A, Y)
        tr = prod[0] + prod[3]
        return Fraction(tr.residue_mod(1), p)

    def __call__(self, g) -> Optional[Fraction]:
        """Lambda(g) as an exponent, or None when g is outside E^x U_J^1."""
        dec = self.iwahori.decompose(g)
        if dec is None:
            return None
        m, _kappa, a, b = dec
        sign, beta = self.pair.param
        p = self.iwahori.p
        return (Fraction(0 if sign == 1 else m, 2) + Fraction(beta * (a + b) % p, p)) % 1


@dataclass
class TestFunction:
    """An evaluable local test function on the quaternion model.

    ``evaluate(g)`` returns an exponent x (value e(x)) or None for value 0.
    """

    kind: str
    ext: Optional[QuadExt] = None
    model: Optional[QuaternionModel] = None
    pair: Optional[AdmissiblePair] = None
    omega: Optional[ToricChar] = None
    n_omega: int = 0
    k: Optional[int] = None
    m: Optional[int] = None
    _lam: Optional[LambdaChar] = field(default=None, repr=False)

    def evaluate(self, g: QuatElem) -> Optional[Fraction]:
        if self.kind == "sigma1":
            return Fraction(0) if _in_ZR_units(g, 0, division=True) else None
        if self.kind == "gp":
            return Fraction(0) if _in_ZR_units(g, self.n_omega, division=False) else None
        if self.kind == "sigma2":
            return _sigma2_value(g, self.omega)
        if self.kind == "sigma3":
            val = self._lam(self._lam.iwahori.from_quaternion(g))
            return None if val is None else (-val) % 1
        raise MismatchedPlaceKind(f"evaluate not available for kind {self.kind}")

    @property
    def cell_level(self) -> int:
        """r (E-valuation units) with U_E^r inside the two-sided invariance group and ker Omega."""
        if self.kind in ("sigma1", "sigma2"):
            return 1
        if self.kind == "sigma3":
            return 2
        return max(1, self.ext.e * self.n_omega)


def _in_o_plus(x: QElem, n: int) -> bool:
    """x in o + p^n o_E (basis 1, w with o_E = o[w])."""
    return x.a.valuation_at_least(0) and x.b.valuation_at_least(n)


def _in_ZR_units(g: QuatElem, n: int, division: bool) -> bool:
    """g in Z R^x for the maximal order attached to n.

    division=True: R = {(alpha, beta): alpha, beta in o_E} in the model with v(eps) = 1.
    Otherwise the maximal order with R cap E = o + p^n o_E:
        alpha in ((tau' - tau) p^n)^{-1} (o + p^n o_E),  alpha + beta in o + p^n o_E.
    """
    ext = g.model.ext
    p = ext.p
    v = g.nrd().valuation()
    if v % 2:
        return False
    lam = PadicElem.from_rational(p, Fraction(1, p ** (v // 2)) if v >= 0 else p ** (-v // 2), ext.M + 64)
    h = g.scale(lam)
    if division:
        return h.alpha.is_integral() and h.beta.is_integral()
    w = ext.elem(0, 1)
    c = (w.conj() - w) * ext.elem(p ** n)
    return _in_o_plus(c * h.alpha, n) and _in_o_plus(h.alpha + h.beta, n)


def _sigma2_value(g: QuatElem, theta: ToricChar) -> Optional[Fraction]:
    """theta^{-1}(z) when g = z u with z in E^x, u in U_D^1 = 1 + w_D R; else None."""
    alpha = g.alpha
    if alpha.a.is_inexact_zero and alpha.b.is_inexact_zero:
        return None
    u_beta = g.beta / alpha
    # u = (1, alpha^{-1} beta); u - 1 = (0, y) lies in w_D R iff y in o_E
    if not u_beta.is_integral():
        return None
    return (-theta(alpha)) % 1


def gp_order_basis(ext: QuadExt, n: int):
    """An o-basis of the maximal order R(n) as quaternion pairs (for audits)."""
    w = ext.elem(0, 1)
    c_inv = ((w.conj() - w) * ext.elem(ext.p ** n)).inv()
    pn = ext.elem(ext.p ** n)
    z = ext.elem(0)
    # alpha = c^{-1} x with x in {1, p^n w}; beta = -alpha + y with y in {1, p^n w}
    alphas = [c_inv, c_inv * pn * w]
    ys = [ext.one(), pn * w]
    return [(a, -a) for a in alphas] + [(z, y) for y in ys]


def build_test_function(place: PlaceData, pair_or_omega=None, M: int = 6) -> TestFunction:
    """Test function f'_v for a place.

    sigma2 / sigma3 take an AdmissiblePair; "other" places take the character
    Omega_v (a ToricChar) or None for the trivial character.
    """
    if place.cls == "inf":
        if place.k is None or place.m is None or abs(place.m) >= place.k:
            raise MismatchedPlaceKind("archimedean place needs |m| < k")
        return TestFunction("arch", k=place.k, m=place.m)
    kind = {"inert": "unramified", "ramified": "ramified", "split": "split"}[place.splitting]
    ext = QuadExt(LocalFieldDesc(place.p, 1, M), kind)
    if place.cls == "sigma1":
        if kind != "unramified":
            raise MismatchedPlaceKind("sigma1 places are inert")
        return TestFunction("sigma1", ext, QuaternionModel(ext, place.p), omega=ToricChar.trivial(ext))
    if place.cls == "sigma2":
        if not isinstance(pair_or_omega, AdmissiblePair) or pair_or_omega.level != "0" or kind != "unramified":
            raise MismatchedPlaceKind("sigma2 needs an inert place and a level-0 pair")
        theta = pair_or_omega.theta(ext)
        return TestFunction("sigma2", ext, QuaternionModel(ext, place.p), pair_or_omega, theta, theta.n_omega)
    if place.cls == "sigma3":
        if not isinstance(pair_or_omega, AdmissiblePair) or pair_or_omega.level != "1/2" or kind != "ramified":
            raise MismatchedPlaceKind("sigma3 needs a ramified place and a level-1/2 pair")
        theta = pair_or_omega.theta(ext)
        tf = TestFunction("sigma3", ext, QuaternionModel(ext, 1), pair_or_omega, theta, theta.n_omega)
        tf._lam = LambdaChar(pair_or_omega, IwahoriModel(ext))
        return tf
    if isinstance(pair_or_omega, AdmissiblePair):
        raise MismatchedPlaceKind("Gross-Prasad places take a character, not a pair")
    omega = pair_or_omega
    if omega is None:
        omega = ToricChar.trivial(ext)
    elif omega.ext != ext:
        omega = _rebase_char(omega, ext)
    return TestFunction("gp", ext, QuaternionModel(ext, 1), omega=omega, n_omega=omega.n_omega)


def _rebase_char(omega: ToricChar, ext: QuadExt) -> ToricChar:
    if omega.ext.kind != ext.kind or omega.ext.p != ext.p:
        raise MismatchedPlaceKind("character lives on a different extension")
    return omega


# ---------------------------------------------------------------------------
# Volumes and spectral values
# ---------------------------------------------------------------------------


def local_volume(place_kind: str, q: int | None = None, which: str = "default") -> ExactScalar:
    """Local volumes in the symbols vol(U_v), L(2,1_v).

    place_kind / which:
      arch                -> vol(D_v^x / Z_v) = 4 pi^2   (which="F\\E": vol(R^x\\C^x) = 2)
      sigma1              -> vol(R_v^x)        (which="RZ/Z": vol(R^x Z/Z))
      sigma2              -> vol(E^x U_D^1 / F^x)
      sigma3              -> vol(E^x U_J^1 / F^x)   (which="U_J1": vol(U_J^1))
      gl2                 -> vol(GL_2(o))      (which="RZ/Z": vol(R^x Z/Z))
    """
    if place_kind == "arch":
        return ExactScalar.rational(2) if which == "F\\E" else 4 * ExactScalar.pi(2)
    if q is None:
        raise ValueError("non-archimedean volumes need q")
    inv_L2 = L2 ** -1
    if place_kind == "sigma1":
        if which == "RZ/Z":
            return inv_L2 * VOL_U ** 3 * Fraction(1, q - 1)
        return inv_L2 * VOL_U ** 4 * Fraction(1, q - 1)
    if place_kind == "sigma2":
        return inv_L2 * VOL_U ** 3 * Fraction(1, q - 1)
    if place_kind == "sigma3":
        if which == "U_J1":
            return inv_L2 * VOL_U ** 4 * Fraction(1, (q - 1) ** 2 * (q + 1))
        # E^x U_J^1 / F^x = <w_E>/<p> x U_J^1/U_F^1: factor 2 (q-1) over vol(U_J^1) / vol(U)
        return Fraction(2 * (q - 1)) * local_volume("sigma3", q, "U_J1") * VOL_U ** -1
    if place_kind == "gl2":
        if which == "RZ/Z":
            return inv_L2 * VOL_U ** 3
        return inv_L2 * VOL_U ** 4
    raise MismatchedPlaceKind(f"unknown place kind {place_kind!r}")


def local_L_factor_sigma2(s: Fraction, q: int) -> Fraction:
    """L(s, pi_E (x) Omega) at sigma2 places: (1 + q^{-2s})^{-1} (only s = 1/2 is rational)."""
    if s != Fraction(1, 2):
        raise ValueError("rational only at s = 1/2")
    return 1 / (1 + Fraction(1, q))


def _lratio_symbol(place: PlaceData) -> ExactScalar:
    return ExactScalar.symbol(f"Lratio_{place.p}")


def local_spectral_value(place: PlaceData, tf: TestFunction) -> ExactScalar:
    """Closed-form J_{pi'_v}(f'_v).

    For places where pi_v is unramified the ratio L(1/2, pi_E (x) Omega)/L(1, pi, Ad)
    depends on the Satake parameters; it is kept as the symbol Lratio_p.
    """
    q = place.p
    if place.cls == "sigma2":
        if tf.kind != "sigma2":
            raise MismatchedPlaceKind("test function does not match the place")
        L_half = local_L_factor_sigma2(Fraction(1, 2), q)
        L_ad = 1 / (1 + Fraction(1, q))  # L(1, eta_v) for the unramified quadratic extension
        return local_volume("sigma2", q) * (L_half / L_ad)
    if place.cls == "sigma3":
        if tf.kind != "sigma3":
            raise MismatchedPlaceKind("test function does not match the place")
        # L(s, pi_E (x) Omega) = 1 and L(s, pi, Ad) = 1 for these simple supercuspidals
        return local_volume("sigma3", q)
    if place.cls == "sigma1":
        if tf.kind != "sigma1":
            raise MismatchedPlaceKind("test function does not match the place")
        return local_volume("sigma1", q, "RZ/Z") * _lratio_symbol(place)
    if place.cls == "other":
        if tf.kind != "gp":
            raise MismatchedPlaceKind("test function does not match the place")
        base = local_volume("gl2", q, "RZ/Z") * _lratio_symbol(place)
        n = place.n_omega
        L1 = Fraction(q, q - 1)
        if place.splitting == "split":
            if n == 0:
                return base * VOL_U * L2 * (1 / L1)
            return base * VOL_U * L2 * L1 * Fraction(1, q ** n)
        e = 2 if place.splitting == "ramified" else 1
        L1eta = Fraction(q, q + 1) if place.splitting == "inert" else Fraction(1)
        if n == 0:
            return base * L2 * Fraction(1, e) * (1 / L1eta)
        return base * L2 * (L1eta ** 2 * Fraction(1, e * q ** n)) * (1 / L1eta)
    raise MismatchedPlaceKind(f"no closed form for place class {place.cls}")


def resolve_local_symbols(x: ExactScalar, q: int, vol_u: Fraction | None = None) -> ExactScalar:
    """Substitute L(2,1_v) = (1 - q^-2)^-1 (and optionally vol(U_v))."""
    b = {"L(2,1_v)": ExactScalar.rational(Fraction(q * q, q * q - 1))}
    if vol_u is not None:
        b["vol(U_v)"] = ExactScalar.rational(vol_u)
    return x.subs(b)
