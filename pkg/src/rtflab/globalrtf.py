"""Global assembly: place classification, the singular and spectral constants,
the regular-orbit support set and its emptiness criteria, the exact check of the
main identity, the regular-orbital bound and the subconvexity bookkeeping.

Full arithmetic is implemented for F = Q.  Other totally real fields are
accepted through configured invariants (degree, discriminant, class number and
an explicit list of finite places), which is enough for the exact identity but
not for enumeration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import sympy
from sympy import factorint
from sympy.functions.combinatorial.numbers import kronecker_symbol

from .arch import ArchPlace, arch_orbital_abs_bound, arch_orbital_closed
from .exactnum import ExactScalar
from .orbital import RegularOrbitPoint
from .pairs import PlaceData

__all__ = [
    "SetupError",
    "ParityViolation",
    "SplittingMismatch",
    "CoprimalityViolation",
    "EvenResidueInN2N3",
    "CriteriaNotMet",
    "UnsupportedBaseField",
    "SigmaThreeNonEmpty",
    "TOutOfRange",
    "FinitePlace",
    "GlobalSetup",
    "IdentityReport",
    "classify_places",
    "global_singular",
    "global_singular_from_local",
    "spectral_constant",
    "spectral_constant_from_places",
    "spectral_prefactor",
    "theorem_rhs",
    "verify_identity",
    "emptiness_criteria",
    "hilbert_symbol",
    "membership_report",
    "enumerate_regular_support",
    "regular_bound_total",
    "subconvexity_report",
    "conductor_table",
    "L_SYMBOL",
    "BoundValue",
    "support_modulus",
    "default_a",
    "c_omega",
    "c_prime_omega",
    "conductor_exponents",
    "L_S_prime",
    "binomial_factor",
    "lemma74_cardinality",
]

L_SYMBOL = "L^{S'}(1,eta)"


class SetupError(ValueError):
    pass


class ParityViolation(SetupError):
    pass


class SplittingMismatch(SetupError):
    pass


class CoprimalityViolation(SetupError):
    pass


class EvenResidueInN2N3(SetupError):
    pass


class CriteriaNotMet(RuntimeError):
    pass


class UnsupportedBaseField(NotImplementedError):
    pass


class SigmaThreeNonEmpty(ValueError):
    pass


class TOutOfRange(ValueError):
    pass


# ---------------------------------------------------------------------------
# Setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FinitePlace:
    """A finite place given by invariants only (used when F != Q).

    q is the residue field size, cls one of sigma1/sigma2/sigma3/other,
    n_omega = n(Omega_v) for places in S'(Omega).
    """

    q: int
    cls: str
    splitting: str
    n_omega: int = 0


@dataclass
class GlobalSetup:
    """Arithmetic data of one instance.

    For F = Q, N1, N2, N3 are positive square-free integers, disc_E is the
    (negative) fundamental discriminant of E, and omega_n maps primes outside
    N1 N2 N3 to n(Omega_p) > 0.  For [F:Q] > 1 the N_i are ideal norms, d_EF
    must be given and the finite places are listed explicitly in ``places``.
    """

    N1: int
    N2: int
    N3: int
    k: tuple
    m: tuple
    disc_E: Optional[int] = None
    degree: int = 1
    disc_F: int = 1
    h_F: int = 1
    d_EF: Optional[int] = None
    omega_n: dict = field(default_factory=dict)
    places: Optional[list] = None
    label: str = ""

    def __post_init__(self):
        self.k = tuple(self.k)
        self.m = tuple(self.m)
        self.omega_n = {int(p): int(n) for p, n in dict(self.omega_n).items()}
        if self.places is not None:
            self.places = [p if isinstance(p, FinitePlace) else FinitePlace(**p) for p in self.places]
        if self.degree == 1:
            if self.disc_E is None:
                raise SetupError("disc_E is required over Q")
            if self.disc_F != 1 or self.h_F != 1:
                raise SetupError("F = Q has discriminant 1 and class number 1")
            if self.d_EF is None:
                self.d_EF = abs(self.disc_E)
            elif self.d_EF != abs(self.disc_E):
                raise SetupError("d_{E/F} must equal |disc_E| over Q")
        else:
            if self.d_EF is None or self.places is None:
                raise SetupError("[F:Q] > 1 needs d_EF and an explicit place list")

    @property
    def abs_disc_E(self) -> int:
        """|Delta_E| = Delta_F^2 d_{E/F}."""
        return self.disc_F ** 2 * self.d_EF

    @classmethod
    def from_json(cls, data: dict) -> "GlobalSetup":
        return cls(**data)

    @classmethod
    def load(cls, path) -> "GlobalSetup":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        out = {
            "N1": self.N1, "N2": self.N2, "N3": self.N3, "k": list(self.k), "m": list(self.m),
            "disc_E": self.disc_E, "degree": self.degree, "disc_F": self.disc_F, "h_F": self.h_F,
            "d_EF": self.d_EF, "omega_n": {str(p): n for p, n in self.omega_n.items()}, "label": self.label,
        }
        if self.places is not None:
            out["places"] = [p.__dict__ for p in self.places]
        return out


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(n).values())


def _splitting_Q(disc_E: int, p: int) -> str:
    s = kronecker_symbol(disc_E, p)
    return {1: "split", -1: "inert", 0: "ramified"}[s]


def _primes(n: int) -> list[int]:
    return sorted(factorint(n))


def classify_places(setup: GlobalSetup) -> list[PlaceData]:
    """Tag every relevant place.  Infinite places come first, then finite ones by norm."""
    for name in ("N1", "N2", "N3"):
        n = getattr(setup, name)
        if n < 1 or not _squarefree(n):
            raise CoprimalityViolation(f"{name} = {n} must be a positive square-free integer")
    N1, N2, N3 = setup.N1, setup.N2, setup.N3
    if setup.degree == 1 and (math.gcd(N1, N2) > 1 or math.gcd(N1, N3) > 1 or math.gcd(N2, N3) > 1):
        raise CoprimalityViolation("N1, N2, N3 must be pairwise coprime")
    if (N2 * N3) % 2 == 0:
        raise EvenResidueInN2N3("N2 N3 must be odd")
    if len(setup.k) != setup.degree or len(setup.m) != setup.degree:
        raise SetupError("one weight k_v and one m_v per real place")
    infs = []
    for kv, mv in zip(setup.k, setup.m):
        if kv < 1 or abs(mv) >= kv:
            raise SetupError(f"need |m_v| < k_v, got k={kv}, m={mv}")
        infs.append(PlaceData(None, "inf", "complex", 0, kv, mv))

    finite: list[PlaceData] = []
    if setup.degree == 1:
        cls_of = {}
        for p in _primes(N1):
            cls_of[p] = "sigma1"
        for p in _primes(N2):
            cls_of[p] = "sigma2"
        for p in _primes(N3):
            cls_of[p] = "sigma3"
        for p in setup.omega_n:
            if p in cls_of:
                raise SetupError(f"n(Omega_{p}) is fixed by the place class; do not list it in omega_n")
        for p in _primes(abs(setup.disc_E)):
            cls_of.setdefault(p, "other")
        for p in setup.omega_n:
            cls_of.setdefault(p, "other")
        for p in sorted(cls_of):
            c = cls_of[p]
            s = _splitting_Q(setup.disc_E, p)
            n = {"sigma1": 0, "sigma2": 1, "sigma3": 1}.get(c, setup.omega_n.get(p, 0))
            finite.append(PlaceData(p, c, s, n))
        counts = {c: sum(1 for f in finite if f.cls == c) for c in ("sigma1", "sigma2", "sigma3")}
    else:
        for fp in sorted(setup.places, key=lambda x: (x.q, x.cls)):
            n = {"sigma1": 0, "sigma2": 1, "sigma3": 1}.get(fp.cls, fp.n_omega)
            finite.append(PlaceData(fp.q, fp.cls, fp.splitting, n))
        counts = {c: sum(1 for f in finite if f.cls == c) for c in ("sigma1", "sigma2", "sigma3")}
        prod = {c: math.prod(f.p for f in finite if f.cls == c) for c in ("sigma1", "sigma2", "sigma3")}
        if (prod["sigma1"], prod["sigma2"], prod["sigma3"]) != (N1, N2, N3):
            raise SetupError("the listed places do not multiply out to N1, N2, N3")

    for f in finite:
        if f.cls in ("sigma1", "sigma2") and f.splitting != "inert":
            raise SplittingMismatch(f"place {f.p} in {f.cls} must be inert in E, it is {f.splitting}")
        if f.cls == "sigma3" and f.splitting != "ramified":
            raise SplittingMismatch(f"place {f.p} in sigma3 must be ramified in E, it is {f.splitting}")
        if f.cls == "other" and f.n_omega < 0:
            raise SetupError("n(Omega_v) must be non-negative")
    if (setup.degree + counts["sigma1"] + counts["sigma2"]) % 2:
        raise ParityViolation("#(Sigma_inf + Sigma_1 + Sigma_2) must be even")
    if counts["sigma2"] + counts["sigma3"] == 0:
        raise SetupError("Sigma_2 and Sigma_3 cannot both be empty")
    return infs + finite


def _finite(places) -> list[PlaceData]:
    return [p for p in places if p.cls != "inf"]


def _s_prime(places) -> list[PlaceData]:
    return [p for p in _finite(places) if p.cls == "other" and p.n_omega > 0]


def _L1eta_local(place: PlaceData) -> Fraction:
    q = place.p
    return {"inert": Fraction(q, q + 1), "ramified": Fraction(1), "split": Fraction(q, q - 1)}[place.splitting]


def conductor_exponents(setup: GlobalSetup, places=None) -> dict:
    """q_v-adic exponent of c(Omega_v) per finite place (E-conductor norm)."""
    places = places or classify_places(setup)
    out = {}
    for p in _finite(places):
        if p.cls in ("sigma2", "sigma3"):
            out[p.p] = 2  # level-0 theta on an inert place, level-1/2 theta on a ramified place
        elif p.n_omega > 0:
            out[p.p] = 2 * p.n_omega
    return out


def c_omega(setup: GlobalSetup, places=None) -> int:
    return math.prod(q ** e for q, e in conductor_exponents(setup, places).items())


def c_prime_omega(setup: GlobalSetup, places=None) -> Fraction:
    """c'(Omega) = c(Omega) / |N2|^2."""
    return Fraction(c_omega(setup, places), setup.N2 ** 2)


def L_S_prime(setup: GlobalSetup, places=None) -> Fraction:
    """L_{S'(Omega)}(1, eta): the product of local factors over S'(Omega)."""
    places = places or classify_places(setup)
    return math.prod((_L1eta_local(p) for p in _s_prime(places)), start=Fraction(1))


def binomial_factor(setup: GlobalSetup) -> int:
    return math.prod(math.comb(2 * kv - 2, kv + mv - 1) for kv, mv in zip(setup.k, setup.m))


def conductor_table(setup: GlobalSetup) -> dict:
    """Local conductors of pi x sigma_Omega at the jointly ramified places, and the total

    c(pi x sigma_Omega) = |N1 N2|^2 |N3|^5 prod_{v outside Sigma} (d_v c(Omega_v))^2.
    """
    places = classify_places(setup)
    table = {}
    for p in _finite(places):
        if p.cls == "sigma2":
            table[p.p] = p.p ** 2
        elif p.cls == "sigma3":
            table[p.p] = p.p ** 5
    rest = 1
    cexp = conductor_exponents(setup, places)
    for p in _finite(places):
        if p.cls == "other":
            vd = _vp(Fraction(setup.d_EF), p.p)
            rest *= (p.p ** (vd + cexp.get(p.p, 0))) ** 2
    total = (setup.N1 * setup.N2) ** 2 * setup.N3 ** 5 * rest
    return {"local": table, "total": total}


# ---------------------------------------------------------------------------
# Exact constants
# ---------------------------------------------------------------------------


def _sqrt_frac(x: Fraction) -> ExactScalar:
    return ExactScalar.sqrt(Fraction(x))


def global_singular(setup: GlobalSetup) -> ExactScalar:
    """I(0, f') = 2^{[F:Q]} sqrt(|Delta_F| / |Delta_E|) |N2 N3| / sqrt(c(Omega)) L_{S'}(1, eta)."""
    places = classify_places(setup)
    val = ExactScalar.rational(2 ** setup.degree) * _sqrt_frac(Fraction(setup.disc_F, setup.abs_disc_E))
    val = val * (setup.N2 * setup.N3) / _sqrt_frac(Fraction(c_omega(setup, places)))
    return val * L_S_prime(setup, places)


def global_singular_from_local(setup: GlobalSetup) -> tuple[ExactScalar, dict]:
    """Product of the local singular integrals with Tamagawa volumes.

    vol(U_v \\ U_{E_v}) is N(d_v)^{-1/2} and vol(F_v^x \\ E_v^x) is e_v times
    that; the finite product of vol(U_v \\ U_{E_v}) is sqrt(|Delta_F|/|Delta_E|).
    Only F = Q is resolved place by place.
    """
    if setup.degree != 1:
        raise UnsupportedBaseField("local volumes are resolved only for F = Q")
    places = classify_places(setup)
    val = ExactScalar.rational(1)
    parts = {}
    for pl in places:
        if pl.cls == "inf":
            loc = ExactScalar.rational(2)
            parts["inf"] = str(loc)
        else:
            q = pl.p
            e = 2 if pl.splitting == "ramified" else 1
            u = _sqrt_frac(Fraction(1, q ** _vp(Fraction(setup.d_EF), q)))
            if pl.cls in ("sigma1", "sigma2", "sigma3"):
                loc = u * e
            elif pl.n_omega == 0:
                loc = u
            else:
                loc = u * (Fraction(1, q ** pl.n_omega) * _L1eta_local(pl))
            parts[str(q)] = str(loc)
        val = val * loc
    # places unramified in E with trivial Omega contribute vol(U\U_E) = 1
    return val, parts


def spectral_constant(setup: GlobalSetup) -> ExactScalar:
    """C(2k, N, Theta, S_0) = 4^{[F:Q]} / |Delta_F|^{3/2} * 2^{#Sigma3} / |N1 N3|."""
    places = classify_places(setup)
    n3 = sum(1 for p in places if p.cls == "sigma3")
    return (
        ExactScalar.rational(Fraction(4 ** setup.degree * 2 ** n3, setup.N1 * setup.N3))
        / (ExactScalar.sqrt(setup.disc_F) * setup.disc_F)
    )


def spectral_constant_from_places(setup: GlobalSetup) -> tuple[ExactScalar, ExactScalar]:
    """The place-by-place product defining C, with vol(U_v) resolved so that prod vol(U_v) = |Delta_F|^{-1/2}.

    Returns (product, product with the (1 + q^{-1})^2 factor at Sigma2 removed).
    The second value is the one that matches the closed form.
    """
    from .pairs import local_volume

    places = classify_places(setup)
    # archimedean: L(2, 1_R) vol(G')/pi = pi^{-1} * 4 pi^2 / pi = 4
    total = ExactScalar.rational(4 ** setup.degree)
    sigma2_extra = Fraction(1)
    for pl in _finite(places):
        q = pl.p
        L2 = ExactScalar.rational(Fraction(q * q, q * q - 1))
        bind = {"L(2,1_v)": L2, "vol(U_v)": ExactScalar.rational(1)}
        if pl.cls == "sigma1":
            loc = L2 * local_volume("sigma1", q, "RZ/Z") * Fraction(q - 1, q)
        elif pl.cls == "sigma2":
            extra = (1 + Fraction(1, q)) ** 2
            sigma2_extra *= extra
            loc = L2 * local_volume("sigma2", q) * (q * Fraction(q - 1, q)) * extra
        elif pl.cls == "sigma3":
            loc = L2 * local_volume("sigma3", q) * (q * (1 - Fraction(1, q * q)))
        else:
            loc = L2 * local_volume("gl2", q, "RZ/Z")
        total = total * loc.subs(bind)
    # vol(U_v)^3 over all finite places
    total = total / (ExactScalar.sqrt(setup.disc_F) * setup.disc_F)
    return total, total * (1 / sigma2_extra)


def spectral_prefactor(setup: GlobalSetup) -> ExactScalar:
    """Coefficient of sum L(1/2, pi_E x Omega)/L(1, pi, Ad) in J(f'), binomial included.

    4^{[F:Q]} L_{S'}^2 / (2 |Delta_F|^2 sqrt(c(Omega) d)) * 2^{#Sigma3}/|N1 N3| * binom.
    """
    places = classify_places(setup)
    LS = L_S_prime(setup, places)
    c = c_omega(setup, places)
    n3 = sum(1 for p in places if p.cls == "sigma3")
    head = ExactScalar.rational(Fraction(4 ** setup.degree) * LS * LS / (2 * setup.disc_F ** 2))
    head = head / _sqrt_frac(Fraction(c * setup.d_EF))
    return head * Fraction(2 ** n3, setup.N1 * setup.N3) * binomial_factor(setup)


def theorem_rhs(setup: GlobalSetup, L_value: Optional[ExactScalar] = None) -> ExactScalar:
    """|N1 N2 N3^2| |Delta_F|^{3/2} / 2^{#Sigma3 + [F:Q] - 2} * L^{S'}(1, eta).

    L^{S'} is the formal symbol unless a value is supplied.
    """
    places = classify_places(setup)
    n3 = sum(1 for p in places if p.cls == "sigma3")
    L = ExactScalar.symbol(L_SYMBOL) if L_value is None else ExactScalar.coerce(L_value)
    num = ExactScalar.rational(setup.N1 * setup.N2 * setup.N3 ** 2) * ExactScalar.sqrt(setup.disc_F) * setup.disc_F
    return num * Fraction(4, 2 ** (n3 + setup.degree)) * L


@dataclass
class IdentityReport:
    lhs: ExactScalar
    rhs: ExactScalar
    verdict: str
    residual: list
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "verdict": self.verdict,
            "residual": self.residual,
            "notes": self.notes,
        }


_MUTATIONS = ("rhs_power_of_2", "prefactor_4", "singular_2", "N1", "N2", "N3_square", "disc_F", "c_omega", "binomial")


def verify_identity(setup: GlobalSetup, mutation: Optional[str] = None, require_criteria: bool = True) -> IdentityReport:
    """Check 2 L(1, eta) I(0, f') = spectral_prefactor * (RHS / binom) exactly.

    L(1, eta) is split as L^{S'}(1, eta) (formal symbol) times L_{S'}(1, eta)
    (exact rational).  ``mutation`` perturbs one constant by a factor 2 (or
    drops a square) to show the check is sensitive to it.
    """
    if mutation is not None and mutation not in _MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}; choose from {_MUTATIONS}")
    if require_criteria and not any(emptiness_criteria(setup)):
        raise CriteriaNotMet("neither emptiness criterion holds; regular orbits may contribute")
    places = classify_places(setup)
    Lsym = ExactScalar.symbol(L_SYMBOL)
    L_full = Lsym * L_S_prime(setup, places)

    sing = global_singular(setup)
    if mutation == "singular_2":
        sing = sing * 2
    lhs = 2 * L_full * sing

    pref = spectral_prefactor(setup)
    rhs_sum = theorem_rhs(setup) / binomial_factor(setup)
    if mutation == "rhs_power_of_2":
        rhs_sum = rhs_sum * 2
    elif mutation == "prefactor_4":
        pref = pref * Fraction(1, 4) * 2
    elif mutation == "N1":
        rhs_sum = rhs_sum * Fraction(2 * setup.N1 + 1, setup.N1)
    elif mutation == "N2":
        rhs_sum = rhs_sum * Fraction(setup.N2 + 1, setup.N2)
    elif mutation == "N3_square":
        rhs_sum = rhs_sum * Fraction(setup.N3 + 1, setup.N3)
    elif mutation == "disc_F":
        rhs_sum = rhs_sum * ExactScalar.sqrt(2)
    elif mutation == "c_omega":
        pref = pref * ExactScalar.sqrt(Fraction(1, 2))
    elif mutation == "binomial":
        rhs_sum = rhs_sum * binomial_factor(setup) * Fraction(1, binomial_factor(setup) + 1)
    rhs = pref * rhs_sum
    diff = lhs - rhs
    residual = [f"{c}*sqrt({d})*pi^{n}*{dict(s)}" for (d, n, s), c in sorted(diff.terms.items())]
    notes = {
        "L_S_prime": str(L_S_prime(setup, places)),
        "c_omega": c_omega(setup, places),
        "binomial": binomial_factor(setup),
        "I0": str(sing),
        "prefactor": str(pref),
    }
    return IdentityReport(lhs, rhs, "equal" if diff.is_zero() else "unequal", residual, notes)


# ---------------------------------------------------------------------------
# Regular support
# ---------------------------------------------------------------------------


def emptiness_criteria(setup: GlobalSetup) -> tuple[bool, bool]:
    places = classify_places(setup)
    c = c_omega(setup, places)
    h = setup.h_F
    lhs1 = setup.N1 * setup.N2 ** (1 + 2 * h) * setup.N3 ** (1 + 3 * h)
    cond1 = lhs1 >= (setup.d_EF * c) ** h
    lhs2 = setup.N1 * setup.N2 ** 3 * setup.N3 ** 4
    # N1 N2^3 N3^4 >= d c sqrt(|Delta_F|), compared after squaring
    cond2 = lhs2 >= 0 and lhs2 ** 2 >= (setup.d_EF * c) ** 2 * setup.disc_F
    return cond1, cond2


def _vp(x: Fraction, p: int) -> int:
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of 0")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def hilbert_symbol(a: Fraction, b: Fraction, p) -> int:
    """(a, b)_p for rationals a, b; p a prime or "inf"."""
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol of 0")
    # reduce to integers: (a, b) depends only on classes mod squares
    a = a.numerator * a.denominator
    b = b.numerator * b.denominator
    if p == "inf":
        return -1 if a < 0 and b < 0 else 1
    al, bl = _vp(Fraction(a), p), _vp(Fraction(b), p)
    u = a // p ** al
    w = b // p ** bl
    if p != 2:
        s = (-1) ** (al * bl * ((p - 1) // 2) % 2)
        s *= sympy.legendre_symbol(u % p, p) ** bl
        s *= sympy.legendre_symbol(w % p, p) ** al
        return int(s)
    eps = lambda x: ((x - 1) // 2) % 2
    omg = lambda x: ((x * x - 1) // 8) % 2
    e = (eps(u) * eps(w) + al * omg(w) + bl * omg(u)) % 2
    return -1 if e else 1


def membership_report(setup: GlobalSetup, xi: Fraction, places=None) -> dict:
    """Each test defining S(Omega, N) for one xi (F = Q)."""
    if setup.degree != 1:
        raise UnsupportedBaseField("membership tests are implemented for F = Q")
    xi = Fraction(xi)
    places = places or classify_places(setup)
    fin = _finite(places)
    ramD = {p.p for p in fin if p.cls in ("sigma1", "sigma2")}
    out = {"xi_not_0_1": xi not in (0, 1)}
    if not out["xi_not_0_1"]:
        return {**out, "all": False}
    out["negative"] = xi < 0
    out["odd_at_sigma12"] = all(_vp(xi, p) % 2 == 1 for p in ramD)
    bad = set(_primes(abs(xi.numerator) * xi.denominator)) | set(_primes(abs(setup.disc_E))) | {2}
    out["eta_trivial_outside_RamD"] = all(
        hilbert_symbol(xi, setup.disc_E, p) == 1 for p in sorted(bad) if p not in ramD
    )
    out["v_xi_ge_1"] = all(_vp(xi, p.p) >= 1 for p in fin if p.cls in ("sigma1", "sigma2", "sigma3"))
    b = support_modulus(setup, places)
    out["support_condition"] = (b / (1 - xi)).denominator == 1
    out["all"] = all(out.values())
    return out


def support_modulus(setup: GlobalSetup, places=None) -> Fraction:
    """b = c(Omega) d_{E/F} / (N2^2 N3^3): the condition is (1 - xi)^{-1} in b^{-1} Z."""
    return Fraction(c_omega(setup, places) * setup.d_EF, setup.N2 ** 2 * setup.N3 ** 3)


def default_a(setup: GlobalSetup, places=None) -> int:
    """Smallest positive a in d c(Omega) N2^{-2} Z."""
    x = Fraction(c_omega(setup, places) * setup.d_EF, setup.N2 ** 2)
    if x.denominator != 1:
        raise SetupError("d c(Omega) / N2^2 is not integral")
    return int(x)


def enumerate_regular_support(setup: GlobalSetup, a: Optional[int] = None) -> list[RegularOrbitPoint]:
    """S(Omega, N) (a = None) or the enlarged set S(a).

    S(Omega, N): 1 - xi = b / m with 0 < m < b, so xi = (m - b)/m < 0.
    S(a): xi_y = y / (y + a) with y in N1 N2 Z and -a < y < 0 (a > 0).
    """
    if setup.degree != 1:
        raise UnsupportedBaseField("lattice enumeration is implemented for F = Q")
    places = classify_places(setup)
    out = []
    if a is None:
        b = support_modulus(setup, places)
        if b.denominator != 1:
            raise SetupError("c(Omega) d / (N2^2 N3^3) is not integral")
        b = int(b)
        step = setup.N1 * setup.N2 * setup.N3
        # v_p(xi) >= 1 at Sigma1..3 forces N1 N2 N3 | (m - b)
        for y in range(-step, -b, -step):
            xi = Fraction(y, y + b)
            if membership_report(setup, xi, places)["all"]:
                out.append(RegularOrbitPoint(xi))
        return out
    a = int(a)
    if a == 0:
        raise ValueError("a must be nonzero")
    sgn = 1 if a > 0 else -1
    A = abs(a)
    step = setup.N1 * setup.N2
    for y in range(step, A, step):
        y = -sgn * y
        xi = Fraction(y, y + a)
        r = membership_report(setup, xi, places)
        if r["negative"] and r["odd_at_sigma12"] and r["eta_trivial_outside_RamD"]:
            out.append(RegularOrbitPoint(xi))
    return out


# ---------------------------------------------------------------------------
# Bound for the regular contribution
# ---------------------------------------------------------------------------


def _R_local(splitting: str, v: int) -> int:
    """Number of integral ideals of o_{E_v} of norm p^v."""
    if v < 0:
        return 0
    if splitting == "split":
        return v + 1
    if splitting == "inert":
        return 1 if v % 2 == 0 else 0
    return 1


@dataclass
class BoundValue:
    total: float
    terms: list
    cardinality: list
    a: int
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"total": self.total, "terms": self.terms, "cardinality": self.cardinality, "a": self.a, "notes": self.notes}


def _sprime_local_bound(pl: PlaceData, va: int, r: int, t: int) -> float:
    """Bound for |I(xi_y, f'_v)| at v in S'(Omega) in terms of (v(a), r, t), constant 1."""
    q = pl.p
    L = float(_L1eta_local(pl))
    base = q ** (-pl.n_omega)
    if r < va:
        return base * L * L * q ** (-(va - r) / 2)
    if r == va:
        return base * L * (1 + t - r)
    return base * L * (1 + r - va)


def regular_bound_total(setup: GlobalSetup, a: Optional[int] = None) -> BoundValue:
    """Explicit majorant of sum_xi |I(xi, f')| over S(a), with its decomposition.

    Outside S'(Omega) the local factors are the counting functions |R_{E_v}|
    (exact at inert places and Sigma1/2, upper bounds at split and ramified
    ones), at infinity the termwise bound of the closed form, and at S'(Omega)
    the (r, t) case bound with constant 1.  Volumes vol(U_v \\ U_{E_v}) are set
    to their Tamagawa values.
    """
    if setup.degree != 1:
        raise UnsupportedBaseField("the bound pipeline is implemented for F = Q")
    places = classify_places(setup)
    if a is None:
        a = default_a(setup, places)
    pts = enumerate_regular_support(setup, a)
    fin = _finite(places)
    sprime = _s_prime(places)
    terms = []
    total = 0.0
    for pt in pts:
        xi = pt.xi
        y = Fraction(xi * a) / (1 - xi)  # xi = y/(y+a)
        factors = {}
        val = 1.0
        for pl in places:
            if pl.cls == "inf":
                f = float(arch_orbital_abs_bound(ArchPlace(pl.k, pl.m), xi))
                factors["inf"] = f
                val *= f
        primes = set(_primes(abs(y.numerator) * y.denominator)) | set(_primes(abs((y + a).numerator)))
        primes |= {p.p for p in fin}
        for p in sorted(primes):
            pl = next((x for x in fin if x.p == p), None)
            split = pl.splitting if pl else _splitting_Q(setup.disc_E, p)
            cls = pl.cls if pl else "other"
            u = q_half = p ** (-_vp(Fraction(setup.d_EF), p) / 2)
            if pl is not None and pl in sprime:
                r, t = _vp(y, p), _vp(y + a, p)
                f = _sprime_local_bound(pl, _vp(Fraction(a), p), r, t)
            elif cls in ("sigma1", "sigma2"):
                f = u * u * _R_local(split, _vp(y / (setup.N1 * setup.N2), p))
            elif cls == "sigma3":
                # closed form vol(F^x \ E^x)^2 when v(xi) >= 1
                f = (2 * q_half) ** 2 if _vp(xi, p) >= 1 else 0.0
            else:
                mult = 2 if split == "ramified" else 1
                f = mult * u * u * _R_local(split, _vp(y, p)) * _R_local(split, _vp(y + a, p))
            factors[str(p)] = f
            val *= f
        terms.append({"xi": str(xi), "y": str(y), "value": val, "factors": factors})
        total += val
    card = lemma74_cardinality(setup, a, places)
    return BoundValue(total, terms, card, a, {"c_prime": str(c_prime_omega(setup, places)), "count": len(pts)})


def lemma74_cardinality(setup: GlobalSetup, a: int, places=None, max_excess: int = 3) -> list:
    """Admissible (r_i, t_i) cells and the bound 2^{[F:Q]+1}|a| / |N1 N2 prod p_i^{max(r_i, t_i)}|."""
    places = places or classify_places(setup)
    sp = _s_prime(places)
    if not sp:
        return [{"cells": [], "bound": float(Fraction(2 ** (setup.degree + 1) * abs(a), setup.N1 * setup.N2))}]
    options = []
    for pl in sp:
        va = _vp(Fraction(a), pl.p)
        opts = [(r, r) for r in range(1, va)]
        opts += [(r, va) for r in range(va + 1, va + 1 + max_excess)]
        opts += [(va, t) for t in range(max(va, 1), va + 1 + max_excess)]
        options.append(opts)
    out = []
    for combo in _product(options):
        denom = setup.N1 * setup.N2 * math.prod(pl.p ** max(r, t) for pl, (r, t) in zip(sp, combo))
        out.append({"cells": [list(c) for c in combo], "bound": float(Fraction(2 ** (setup.degree + 1) * abs(a), denom))})
    return out


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# Subconvexity bookkeeping
# ---------------------------------------------------------------------------


def subconvexity_report(t, eps, alpha=None, setup: Optional[GlobalSetup] = None) -> dict:
    """Exponent bookkeeping for the hybrid bound, in powers of Q = c'(Omega) |N1 N2|.

    With |N1 N2| = c'^alpha the bound |N1N2|^{1+e} c'^e + |N1N2|^e c'^{1/2+e}
    is Q^{E(alpha)} with E = max(alpha(1+e) + e, e alpha + 1/2 + e)/(1 + alpha).
    alpha defaults to 1/2 - eps, the best case.  The exponent is also expanded
    to first order in a symbolic epsilon.
    """
    t, eps = Fraction(t), Fraction(eps)
    if setup is not None:
        places = classify_places(setup)
        if any(p.cls == "sigma3" for p in places):
            raise SigmaThreeNonEmpty("the hybrid bound needs Sigma_3 empty")
    if not (0 <= t < Fraction(1, 6)):
        raise TOutOfRange("t must satisfy 0 <= t < 1/6")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if setup is not None and alpha is None:
        cp = c_prime_omega(setup)
        alpha = Fraction(math.log(setup.N1 * setup.N2) / math.log(cp)).limit_denominator(10 ** 6) if cp > 1 else None
    if alpha is None:
        alpha = Fraction(1, 2) - eps
    alpha = Fraction(alpha)

    def exponent(al, e):
        return max(al * (1 + e) + e, e * al + Fraction(1, 2) + e) / (1 + al)

    lo = (2 * t + 2 * eps) / (1 - 2 * t - 2 * eps)
    hi = (1 - 2 * t - 2 * eps) / (1 + 2 * t + 2 * eps)
    E = exponent(alpha, eps)

    # symbolic first-order expansion along the best-case curve alpha = 1/2 - e
    e = sympy.Symbol("epsilon", positive=True)
    al = sympy.Rational(1, 2) - e
    branches = [(al * (1 + e) + e) / (1 + al), (e * al + sympy.Rational(1, 2) + e) / (1 + al)]
    series = [sympy.series(b, e, 0, 2).removeO() for b in branches]
    c0 = [s.subs(e, 0) for s in series]
    c1 = [sympy.diff(s, e).subs(e, 0) for s in series]
    top = max(range(2), key=lambda i: (c0[i], c1[i]))
    main = Fraction(str(c0[top]))
    slope = Fraction(str(c1[top]))
    return {
        "t": str(t),
        "eps": str(eps),
        "alpha": str(alpha),
        "window": [str(lo), str(hi)],
        "in_window": lo <= alpha <= hi,
        "exponent": str(E),
        "exponent_float": float(E),
        "corollary_target": str(Fraction(1, 2) - t),
        "beats_target": E <= Fraction(1, 2) - t + 3 * eps,
        "convexity": str(Fraction(1, 2) + eps),
        "best_case_main": str(main),
        "best_case_eps_slope": str(slope),
        "best_case": f"{Fraction(1, 2)} - {Fraction(1, 2) - main} + eps" if slope > 0 else str(main),
    }
