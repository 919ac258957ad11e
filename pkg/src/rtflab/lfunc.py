"""L-value utilities: quadratic characters, L(1, eta), partial Euler products, a
smoothed approximate functional equation, newform fixtures and the numeric
check of the main identity over Q.

Gamma factors are Gamma_R(s) = pi^{-s/2} Gamma(s/2) and
Gamma_C(s) = 2 (2 pi)^{-s} Gamma(s).  A series carries shifts mu so that its
gamma factor is prod Gamma_R(s + mu) * prod Gamma_C(s + mu), and the completed
function Lambda(s) = N^{s/2} gamma(s) L(s) satisfies
Lambda(s) = root_number * conj(Lambda)(1 - s).
"""
from __future__ import annotations

import cmath
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence
from urllib.parse import urlencode
from urllib.request import urlopen

import numpy as np
from scipy.special import digamma, loggamma
from sympy import factorint, prevprime, primerange
from sympy.functions.combinatorial.numbers import kronecker_symbol

from .exactnum import ExactScalar
from .globalrtf import (
    CriteriaNotMet,
    GlobalSetup,
    UnsupportedBaseField,
    binomial_factor,
    classify_places,
    conductor_table,
    emptiness_criteria,
    theorem_rhs,
)

__all__ = [
    "DiscriminantOutOfTable",
    "InsufficientCoefficients",
    "UnknownLocalType",
    "FixtureIncomplete",
    "NoHeckeCharacter",
    "CLASS_NUMBERS",
    "QuadraticCharacter",
    "is_fundamental",
    "unit_count",
    "L_one_eta",
    "partial_euler",
    "CoefficientSeries",
    "AFEResult",
    "afe_central_value",
    "log_gamma_factor",
    "NewformFixture",
    "FixtureSet",
    "load_fixtures",
    "fetch_fixtures",
    "HeckeCharacter",
    "hecke_character_for",
    "rankin_selberg_series",
    "adjoint_series",
    "theorem1_numeric_check",
]


class DiscriminantOutOfTable(KeyError):
    """Raised when (h, w) is not tabulated; ``series`` carries the numeric value."""

    def __init__(self, disc: int, series: float):
        super().__init__(disc)
        self.disc = disc
        self.series = series


class InsufficientCoefficients(ValueError):
    pass


class UnknownLocalType(ValueError):
    pass


class FixtureIncomplete(ValueError):
    pass


class NoHeckeCharacter(ValueError):
    """No Hecke character with the requested infinity type and conductor exists."""


# h(Delta) for negative fundamental discriminants with |Delta| <= 200, from a
# count of reduced binary quadratic forms.
CLASS_NUMBERS = {
    -3: 1, -4: 1, -7: 1, -8: 1, -11: 1, -15: 2, -19: 1, -20: 2, -23: 3, -24: 2,
    -31: 3, -35: 2, -39: 4, -40: 2, -43: 1, -47: 5, -51: 2, -52: 2, -55: 4, -56: 4,
    -59: 3, -67: 1, -68: 4, -71: 7, -79: 5, -83: 3, -84: 4, -87: 6, -88: 2, -91: 2,
    -95: 8, -103: 5, -104: 6, -107: 3, -111: 8, -115: 2, -116: 6, -119: 10, -120: 4,
    -123: 2, -127: 5, -131: 5, -132: 4, -136: 4, -139: 3, -143: 10, -148: 2, -151: 7,
    -152: 6, -155: 4, -159: 10, -163: 1, -164: 8, -167: 11, -168: 4, -179: 5, -183: 8,
    -184: 4, -187: 2, -191: 13, -195: 4, -199: 9,
}


def is_fundamental(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return all(e == 1 for e in factorint(abs(d)).values())
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and all(e == 1 for e in factorint(abs(m)).values())
    return False


def unit_count(d: int) -> int:
    """w_E, the number of roots of unity in the imaginary quadratic field of discriminant d."""
    return {-3: 6, -4: 4}.get(d, 2)


@dataclass(frozen=True)
class QuadraticCharacter:
    """n -> (disc / n), the character of Q(sqrt(disc))/Q."""

    disc: int

    def __post_init__(self):
        if not is_fundamental(self.disc):
            raise ValueError(f"{self.disc} is not a fundamental discriminant")

    def __call__(self, n: int) -> int:
        return int(kronecker_symbol(self.disc, n))

    @property
    def conductor(self) -> int:
        return abs(self.disc)

    @property
    def gamma_R(self) -> tuple:
        return (1,) if self.disc < 0 else (0,)

    def series(self, cutoff: int) -> "CoefficientSeries":
        q = self.conductor
        period = [self(a) for a in range(q)]
        coeffs = np.array([period[n % q] for n in range(1, cutoff + 1)], dtype=float)
        return CoefficientSeries(coeffs, q, gamma_R=self.gamma_R, label=f"chi_{self.disc}")


def L_one_eta(eta: QuadraticCharacter) -> tuple[ExactScalar, float]:
    """(2 pi h / (w sqrt|Delta|), series value) for an imaginary quadratic eta.

    The series value is sum chi(n)/n summed in closed form over residue classes:
    L(1, chi) = -(1/q) sum_{a=1}^{q} chi(a) psi(a/q).
    """
    d = eta.disc
    if d >= 0:
        raise ValueError("only imaginary quadratic discriminants are supported")
    q = eta.conductor
    series = float(-sum(eta(a) * digamma(a / q) for a in range(1, q + 1)) / q)
    if d not in CLASS_NUMBERS:
        raise DiscriminantOutOfTable(d, series)
    h, w = CLASS_NUMBERS[d], unit_count(d)
    exact = ExactScalar.pi(1) * ExactScalar.sqrt(q) * Fraction(2 * h, w * q)
    return exact, series


def partial_euler(eta, s, S: Sequence[int], mode: str = "over_S", cutoff: int = 400):
    """Euler product of L(s, eta) over the primes of S ("over_S"), or the
    complementary value L^S(s, eta) = L(s, eta) / L_S(s, eta) ("omit_S").

    With an integer s the over_S product is an exact rational.  omit_S is
    numeric; L(s, eta) comes from the approximate functional equation on
    ``cutoff`` coefficients.
    """
    if mode not in ("over_S", "omit_S"):
        raise ValueError("mode must be over_S or omit_S")
    S = sorted(set(int(p) for p in S))
    exact = isinstance(s, (int, Fraction)) and Fraction(s).denominator == 1
    if mode == "over_S":
        if exact:
            val = Fraction(1)
            for p in S:
                val /= 1 - Fraction(eta(p), p ** int(s))
            return ExactScalar.rational(val)
        return math.prod(1 / (1 - eta(p) * p ** (-s)) for p in S)
    full = afe_central_value(eta.series(cutoff), s=float(s)).value
    return full * math.prod(1 - eta(p) * p ** (-float(s)) for p in S)


# ---------------------------------------------------------------------------
# Dirichlet series and the approximate functional equation
# ---------------------------------------------------------------------------


def log_gamma_factor(s, gamma_R=(), gamma_C=()):
    out = 0
    for mu in gamma_R:
        z = s + mu
        out = out + (-z / 2 * math.log(math.pi) + loggamma(z / 2))
    for mu in gamma_C:
        z = s + mu
        out = out + (math.log(2) - z * math.log(2 * math.pi) + loggamma(z))
    return out


@dataclass
class CoefficientSeries:
    """a_1, ..., a_cutoff of an L-function with its analytic data.

    ``poles`` lists (p, r) with Lambda(s) ~ r / (s - p); ``euler`` keeps the
    local polynomials in X = p^{-s} when the series was built from them, and
    ``ramanujan`` records max |alpha| over the good Satake parameters seen
    (metadata only).
    """

    coeffs: np.ndarray
    conductor: int
    gamma_R: tuple = ()
    gamma_C: tuple = ()
    root_number: complex = 1
    poles: tuple = ()
    label: str = ""
    euler: Optional[dict] = None
    ramanujan: Optional[float] = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        self.gamma_R = tuple(float(x) for x in self.gamma_R)
        self.gamma_C = tuple(float(x) for x in self.gamma_C)

    @property
    def degree(self) -> int:
        return len(self.gamma_R) + 2 * len(self.gamma_C)

    @property
    def cutoff(self) -> int:
        return len(self.coeffs)

    @classmethod
    def from_euler(cls, local: Callable[[int], Sequence[complex]], cutoff: int, conductor: int, **kw):
        """Multiply out prod_p 1/P_p(p^{-s}) up to n <= cutoff."""
        a = np.zeros(cutoff + 1, dtype=complex)
        a[1] = 1
        euler = {}
        for p in primerange(2, cutoff + 1):
            P = np.asarray(local(p), dtype=complex)
            euler[p] = tuple(P)
            K = int(math.log(cutoff) / math.log(p)) + 1
            inv = np.zeros(K + 1, dtype=complex)
            inv[0] = 1
            for j in range(1, K + 1):
                inv[j] = -sum(P[i] * inv[j - i] for i in range(1, min(j, len(P) - 1) + 1))
            new = a.copy()
            pk = p
            for j in range(1, K + 1):
                if pk > cutoff:
                    break
                idx = np.arange(1, cutoff // pk + 1)
                new[idx * pk] += inv[j] * a[idx]
                pk *= p
            a = new
        coeffs = a[1:]
        if np.allclose(coeffs.imag, 0, atol=1e-10):
            coeffs = coeffs.real
        return cls(coeffs, conductor, euler=euler, **kw)

    def product(self, other: "CoefficientSeries") -> "CoefficientSeries":
        """Dirichlet convolution: the series of L(s, self) L(s, other)."""
        n = min(self.cutoff, other.cutoff)
        a = np.zeros(n + 1, dtype=np.result_type(self.coeffs, other.coeffs))
        for d in range(1, n + 1):
            a[d::d] += self.coeffs[d - 1] * other.coeffs[: n // d]
        return CoefficientSeries(
            a[1:], self.conductor * other.conductor,
            gamma_R=self.gamma_R + other.gamma_R, gamma_C=self.gamma_C + other.gamma_C,
            root_number=self.root_number * other.root_number,
            label=f"{self.label}*{other.label}",
        )


@dataclass
class AFEResult:
    value: float  # L(s), gamma factor removed
    completed: float  # Lambda(s) without the N^{s/2}: gamma(s) L(s)
    error: float
    tail: float
    kernel_spread: float

    def __float__(self):
        return self.value


_QUAD_H = 0.02
_KERNEL_B = (0.0, 0.4)


@lru_cache(maxsize=64)
def _kernel_nodes(s: float, gamma_R: tuple, gamma_C: tuple, b: float, degree: int):
    # G(u) = cosh(b u); |gamma(s + 1 + it)| decays like exp(-pi d |t| / 4), so
    # T = 200 / (pi d) leaves about e^{-50}.
    T = 200 / (math.pi * degree)
    t = np.arange(-T, T + _QUAD_H / 2, _QUAD_H)
    u = 1.0 + 1j * t
    base = np.exp(log_gamma_factor(s + u, gamma_R, gamma_C)) * np.cosh(b * u) / u
    return u, base


def _W(s: float, y: np.ndarray, gamma_R: tuple, gamma_C: tuple, b: float) -> np.ndarray:
    """(1 / 2 pi i) int_{(1)} gamma(s + u) cosh(b u) y^{-u} du / u."""
    u, base = _kernel_nodes(s, gamma_R, gamma_C, b, len(gamma_R) + 2 * len(gamma_C))
    out = np.empty(len(y))
    step = 2048
    for i in range(0, len(y), step):
        blk = np.exp(-np.outer(np.log(y[i : i + step]), u)) @ base
        out[i : i + step] = (blk * _QUAD_H / (2 * math.pi)).real
    return out


@lru_cache(maxsize=32)
def _W_cached(s: float, n: int, N: int, gamma_R: tuple, gamma_C: tuple, b: float) -> np.ndarray:
    """W(s, m / sqrt N) for m = 1 .. 4 n; the part beyond n feeds the tail majorant."""
    y = np.arange(1, 4 * n + 1, dtype=float) / math.sqrt(N)
    return _W(s, y, gamma_R, gamma_C, b)


def _lambda(cs: CoefficientSeries, s: float, b: float, n: int) -> complex:
    N = cs.conductor
    idx = np.arange(1, n + 1, dtype=float)
    a = cs.coeffs[:n]
    w1 = _W_cached(s, n, N, cs.gamma_R, cs.gamma_C, b)[:n]
    w2 = _W_cached(1 - s, n, N, cs.gamma_R, cs.gamma_C, b)[:n]
    lam = N ** (s / 2) * np.sum(a * idx ** (-s) * w1)
    lam = lam + cs.root_number * N ** ((1 - s) / 2) * np.sum(np.conj(a) * idx ** (s - 1) * w2)
    for p, r in cs.poles:
        lam -= r * math.cosh(b * (p - s)) / (p - s)
    return lam


def afe_central_value(cs: CoefficientSeries, s: float = 0.5, tol: float = 1e-8) -> AFEResult:
    """L(s) from the smoothed approximate functional equation.

    The cutoff is driven by the conductor: the weights W(n / sqrt N) must have
    decayed below ``tol`` (relative to W at n = 1) by the last coefficient,
    otherwise InsufficientCoefficients.  The reported error is the larger of a
    tail majorant over (cutoff, 4 cutoff] and the spread between two kernels.
    """
    N = cs.conductor
    n = cs.cutoff
    R, C = cs.gamma_R, cs.gamma_C
    for b in _KERNEL_B:
        for sv in (s, 1 - s):
            w = _W(sv, np.array([1 / math.sqrt(N), n / math.sqrt(N)]), R, C, b)
            if abs(w[1]) > tol * max(abs(w[0]), 1e-300):
                raise InsufficientCoefficients(
                    f"{cs.label}: {n} coefficients are too few for conductor {N} (W ratio {abs(w[1] / w[0]):.2e})"
                )
    vals = [_lambda(cs, s, b, n) for b in _KERNEL_B]
    # tail majorant with |a_m| bounded by the largest |a| among the last half of the known coefficients
    A = float(np.max(np.abs(cs.coeffs[n // 2 :]))) if n > 1 else 1.0
    ys = np.arange(n + 1, 4 * n + 1, dtype=float)
    tail = 0.0
    for sv in (s, 1 - s):
        w = _W_cached(sv, n, N, R, C, _KERNEL_B[0])[n:]
        tail += N ** (sv / 2) * A * float(np.sum(ys ** (-sv) * np.abs(w)))
    scale = N ** (s / 2) * math.exp(float(np.real(log_gamma_factor(s, R, C))))
    lam = vals[0]
    spread = abs(vals[1] - vals[0])
    return AFEResult(
        value=float((lam / scale).real),
        completed=float((lam / N ** (s / 2)).real),
        error=float(max(tail, spread) / scale),
        tail=tail / scale,
        kernel_spread=float(spread / scale),
    )


# ---------------------------------------------------------------------------
# Newform fixtures
# ---------------------------------------------------------------------------

_LOCAL_TYPES = ("steinberg", "depth_zero_supercuspidal", "simple_supercuspidal", "unramified")


@dataclass
class NewformFixture:
    label: str
    level: int
    weight: int
    ap: dict
    local_types: dict
    source: str = ""

    @classmethod
    def from_json(cls, d: dict, source: str = "") -> "NewformFixture":
        ap = {int(p): float(a) for p, a in d["ap"]}
        lt = {int(x["p"]): x["type"] for x in d.get("local_types", [])}
        return cls(d["label"], int(d["level"]), int(d["weight"]), ap, lt, d.get("source", source))

    def to_json(self) -> dict:
        return {
            "label": self.label, "level": self.level, "weight": self.weight,
            "ap": [[p, a] for p, a in sorted(self.ap.items())],
            "local_types": [{"p": p, "type": t} for p, t in sorted(self.local_types.items())],
        }

    def prime_bound(self) -> int:
        return max(self.ap)


@dataclass
class FixtureSet:
    """All newforms of one level and weight that survive the local-type filter.

    ``newspace_dimension`` and ``excluded`` let a consumer check that nothing
    is missing: kept + excluded must account for the whole new space.
    """

    level: int
    weight: int
    forms: list
    newspace_dimension: Optional[int] = None
    excluded: list = field(default_factory=list)
    source: str = ""

    @property
    def complete(self) -> bool:
        return self.newspace_dimension is not None and len(self.forms) + len(self.excluded) == self.newspace_dimension


def _fixture_set_from_json(data) -> FixtureSet:
    if isinstance(data, list):  # bare list of per-form records
        forms = [NewformFixture.from_json(d) for d in data]
        lv = forms[0].level if forms else 0
        wt = forms[0].weight if forms else 0
        return FixtureSet(lv, wt, forms)
    forms = [NewformFixture.from_json(d, data.get("source", "")) for d in data["forms"]]
    return FixtureSet(
        int(data["level"]), int(data["weight"]), forms,
        data.get("newspace_dimension"), data.get("excluded", []), data.get("source", ""),
    )


def load_fixtures(path=None, level: Optional[int] = None, weight: Optional[int] = None) -> FixtureSet:
    """Read a fixture file, or the matching file in a directory (default: the bundled data)."""
    if path is None:
        root = resources.files("rtflab") / "data"
        files = [f for f in root.iterdir() if f.name.startswith("newforms_") and f.name.endswith(".json")]
    else:
        p = Path(path)
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    for f in sorted(files, key=lambda x: x.name):
        fs = _fixture_set_from_json(json.loads(f.read_text()))
        if (level is None or fs.level == level) and (weight is None or fs.weight == weight):
            return fs
    raise FixtureIncomplete(f"no fixture file for level {level}, weight {weight}")


DB_URL_ENV = "RTFLAB_DB_URL"
CACHE_ENV = "RTFLAB_CACHE"


def fetch_fixtures(level: int, weight: int, cache_dir=None, base_url: Optional[str] = None) -> FixtureSet:
    """Fetch ``{base}/newforms?level=N&weight=k`` (a JSON document in the fixture
    schema) and cache it as newforms_N_k.json; a cached copy is used when present.
    """
    cache = Path(cache_dir or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "rtflab")
    target = cache / f"newforms_{level}_{weight}.json"
    if target.exists():
        return load_fixtures(target, level=level, weight=weight)
    base = base_url or os.environ.get(DB_URL_ENV)
    if not base:
        raise FixtureIncomplete(f"set {DB_URL_ENV} to the newform database base URL, or use --fixtures")
    url = f"{base.rstrip('/')}/newforms?{urlencode({'level': level, 'weight': weight})}"
    try:
        with urlopen(url, timeout=60) as resp:
            data = json.loads(resp.read().decode())
    except (OSError, ValueError) as e:
        raise FixtureIncomplete(f"could not retrieve {url}: {e}") from e
    fs = _fixture_set_from_json(data)
    if (fs.level, fs.weight) != (level, weight):
        raise FixtureIncomplete(f"{url} returned level {fs.level}, weight {fs.weight}")
    cache.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(data))
    return fs


# ---------------------------------------------------------------------------
# Hecke characters of imaginary quadratic fields of class number one
# ---------------------------------------------------------------------------


class _Order:
    """O_E = Z[w] with w^2 = t w - n, elements as integer pairs (x, y) = x + y w."""

    def __init__(self, disc: int):
        self.disc = disc
        if disc % 4 == 0:
            self.t, self.n = 0, -disc // 4
        else:
            self.t, self.n = 1, (1 - disc) // 4
        self.w = complex(self.t / 2, math.sqrt(abs(disc)) / 2)

    def mul(self, a, b, mod=None):
        x1, y1 = a
        x2, y2 = b
        x = x1 * x2 - self.n * y1 * y2
        y = x1 * y2 + x2 * y1 + self.t * y1 * y2
        return (x % mod, y % mod) if mod else (x, y)

    def conj(self, a):
        x, y = a
        return (x + self.t * y, -y)

    def norm(self, a):
        x, y = a
        return x * x + self.t * x * y + self.n * y * y

    def embed(self, a) -> complex:
        return a[0] + a[1] * self.w

    def units(self):
        return [a for a in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)) if self.norm(a) == 1]

    def prime_above(self, p: int):
        """A generator of a prime of norm p (class number one)."""
        bound = int(math.isqrt(4 * p)) + 2
        for y in range(0, bound):
            for x in range(-bound, bound):
                if self.norm((x, y)) == p:
                    return (x, y)
        raise ValueError(f"no element of norm {p}")


@dataclass
class HeckeCharacter:
    """Omega with Omega((alpha)) = (conj(alpha) / alpha)^m / prod_q theta_q(alpha mod q).

    theta_q is the character of (O_E / q)^x = F_{q^2}^x sending the chosen
    generator g_q to exp(2 pi i a_q / (q^2 - 1)).
    """

    disc: int
    m: int
    theta: dict  # q -> a_q
    generators: dict = field(default_factory=dict)

    def __post_init__(self):
        self.O = _Order(self.disc)
        self._log = {}
        for q in self.theta:
            g = self.generators.get(q) or _find_generator(self.O, q)
            self.generators[q] = g
            table, cur = {}, (1, 0)
            for j in range(q * q - 1):
                table[cur] = j
                cur = self.O.mul(cur, g, q)
            self._log[q] = table

    def theta_at(self, q: int, a) -> complex:
        x = (a[0] % q, a[1] % q)
        return cmath.exp(2j * math.pi * self.theta[q] * self._log[q][x] / (q * q - 1))

    def __call__(self, a) -> complex:
        z = self.O.embed(a)
        val = (z.conjugate() / z) ** self.m
        for q in self.theta:
            val /= self.theta_at(q, a)
        return val

    def trivial_on_units(self) -> bool:
        return all(abs(self(u) - 1) < 1e-12 for u in self.O.units())


def _find_generator(O: _Order, q: int):
    order = q * q - 1
    for x in range(q):
        for y in range(q):
            if (x, y) == (0, 0):
                continue
            cur, k = (x, y), 1
            while cur != (1, 0):
                cur = O.mul(cur, (x, y), q)
                k += 1
            if k == order:
                return (x, y)
    raise ValueError(f"{q} is not inert")


def hecke_character_for(setup: GlobalSetup) -> HeckeCharacter:
    """A Hecke character with infinity type m, level-0 regular theta_q at every
    sigma2 prime, unramified elsewhere and trivial on Q-ideals.

    Triviality on the idele class group forces triviality on the global units;
    when no choice of the theta_q achieves that, NoHeckeCharacter is raised.
    """
    if setup.degree != 1:
        raise UnsupportedBaseField("Hecke characters are built only over Q")
    if CLASS_NUMBERS.get(setup.disc_E) != 1:
        raise UnsupportedBaseField("E must have class number one")
    places = classify_places(setup)
    if any(p.cls == "sigma3" or (p.cls == "other" and p.n_omega > 0) for p in places):
        raise UnknownLocalType("only level-0 ramification at sigma2 is supported for Hecke characters")
    sigma2 = [p.p for p in places if p.cls == "sigma2"]
    choices = []
    for q in sigma2:
        # theta trivial on F_q^x = <g^{q+1}> means (q - 1) | a; regular means a q != a mod q^2 - 1
        choices.append([a for a in range(q - 1, q * q - 1, q - 1) if (a * q - a) % (q * q - 1)])
    m = setup.m[0]
    tried = []
    for combo in _cartesian(choices):
        chi = HeckeCharacter(setup.disc_E, m, dict(zip(sigma2, combo)))
        if chi.trivial_on_units():
            return chi
        tried.append(combo)
    raise NoHeckeCharacter(
        f"no character with m = {m} unramified outside {sigma2} is trivial on the units of Q(sqrt({setup.disc_E})); "
        f"tried theta exponents {tried}"
    )


def _cartesian(lists):
    out = [()]
    for lst in lists:
        out = [o + (x,) for o in out for x in lst]
    return out


# ---------------------------------------------------------------------------
# Rankin-Selberg and adjoint series
# ---------------------------------------------------------------------------


def _check_types(f: NewformFixture, setup: GlobalSetup):
    want = {"sigma1": "steinberg", "sigma2": "depth_zero_supercuspidal", "sigma3": "simple_supercuspidal"}
    for pl in classify_places(setup):
        if pl.cls in want:
            t = f.local_types.get(pl.p)
            if t is None:
                raise UnknownLocalType(f"{f.label}: no local type at {pl.p}")
            if t not in _LOCAL_TYPES:
                raise UnknownLocalType(f"{f.label}: unrecognised local type {t!r} at {pl.p}")


def _eligible(f: NewformFixture, setup: GlobalSetup) -> bool:
    want = {"sigma1": "steinberg", "sigma2": "depth_zero_supercuspidal", "sigma3": "simple_supercuspidal"}
    return all(f.local_types.get(pl.p) == want[pl.cls] for pl in classify_places(setup) if pl.cls in want)


def _normalised(f: NewformFixture, cutoff: int) -> dict:
    if f.prime_bound() < prevprime(cutoff + 1):
        raise InsufficientCoefficients(f"{f.label}: eigenvalues up to {f.prime_bound()}, need {cutoff}")
    return {p: a / p ** ((f.weight - 1) / 2) for p, a in f.ap.items()}


def _bc_gamma(k: int, m: int) -> tuple:
    return (k - 0.5 + abs(m), abs(k - 0.5 - abs(m)))


def rankin_selberg_series(f: NewformFixture, setup: GlobalSetup, chi: Optional[HeckeCharacter] = None,
                          cutoff: int = 5200) -> CoefficientSeries:
    """L(s, pi x sigma_Omega) = L(s, pi_E x Omega) as a degree-4 series over Q."""
    _check_types(f, setup)
    chi = chi or hecke_character_for(setup)
    lam = _normalised(f, cutoff)
    places = {pl.p: pl for pl in classify_places(setup) if pl.cls != "inf"}
    O = chi.O
    worst = [0.0]

    def satake_bound(l):
        # |alpha| for the roots of X^2 - l X + 1
        r = np.roots([1, -l, 1])
        worst[0] = max(worst[0], float(np.max(np.abs(r))))

    def local(p):
        l = lam[p]
        split = int(kronecker_symbol(setup.disc_E, p))
        pl = places.get(p)
        if pl is not None and pl.cls == "sigma2":
            return [1, 0, 1]  # one unramified constituent, value -1 at the prime of norm p^2
        if pl is not None and pl.cls == "sigma3":
            return [1]
        if pl is not None and pl.cls == "sigma1":
            # Steinberg: lambda_p = +-p^{-1/2}; base change to the inert prime has parameter p^{-1}
            return [1, 0, -l * l]
        if pl is not None and pl.n_omega > 0:
            raise UnknownLocalType(f"ramified Omega at {p} is not supported")
        satake_bound(l)
        if split == -1:
            return [1, 0, -(l * l - 2), 0, 1]
        if split == 0:
            w = chi(O.prime_above(p)).real
            return [1, -w * l, w * w]
        pi = O.prime_above(p)
        w1, w2 = chi(pi), chi(O.conj(pi))
        return np.convolve([1, -w1 * l, w1 * w1], [1, -w2 * l, w2 * w2])

    k, m = setup.k[0], setup.m[0]
    cs = CoefficientSeries.from_euler(
        local, cutoff, conductor_table(setup)["total"],
        gamma_C=_bc_gamma(k, m), label=f"{f.label} x Omega",
    )
    cs.ramanujan = worst[0]
    return cs


def adjoint_conductor(setup: GlobalSetup) -> int:
    exps = {"sigma1": 2, "sigma2": 2, "sigma3": 3}
    return math.prod(pl.p ** exps[pl.cls] for pl in classify_places(setup) if pl.cls in exps)


def adjoint_series(f: NewformFixture, setup: GlobalSetup, cutoff: int = 3000) -> CoefficientSeries:
    """L(s, pi, Ad), degree 3."""
    _check_types(f, setup)
    lam = _normalised(f, cutoff)
    places = {pl.p: pl for pl in classify_places(setup) if pl.cls != "inf"}

    def local(p):
        pl = places.get(p)
        if pl is not None and pl.cls == "sigma2":
            return [1, 1]  # Ad of a depth-zero supercuspidal contains the unramified quadratic character
        if pl is not None and pl.cls == "sigma3":
            return [1]
        if pl is not None and pl.cls == "sigma1":
            return [1, -1 / p]
        l = lam[p]
        return [1, -(l * l - 1), l * l - 1, -1]

    k = setup.k[0]
    return CoefficientSeries.from_euler(
        local, cutoff, adjoint_conductor(setup),
        gamma_R=(1,), gamma_C=(2 * k - 1,), label=f"Ad {f.label}",
    )


# ---------------------------------------------------------------------------
# The end-to-end check
# ---------------------------------------------------------------------------


def _L_inf_one_eta() -> ExactScalar:
    # L_inf(1, eta_inf) = Gamma_R(2) = 1/pi for eta_inf = sgn
    return ExactScalar.pi(-1)


def theorem1_numeric_check(setup: GlobalSetup, fixtures: Optional[FixtureSet] = None, tol: float = 0.01,
                           bc_cutoff: int = 5200, ad_cutoff: int = 3000) -> dict:
    """Evaluate binom * sum_pi L(1/2, pi_E x Omega) / L(1, pi, Ad) over the eligible
    fixtures and compare with the exact right-hand side.

    The left side is reported with completed L-values (gamma factors included)
    and with finite ones; the right side with L^{S'}(1, eta) completed
    (L_inf(1, eta) = 1/pi included) and finite.  ``verdict`` compares the
    completed pair.
    """
    t0 = time.time()
    if setup.degree != 1:
        raise UnsupportedBaseField("the numeric check is implemented over Q only")
    if not all(emptiness_criteria(setup)):
        raise CriteriaNotMet("both emptiness criteria must hold for the identity to have no regular terms")
    places = classify_places(setup)
    level = setup.N1 * setup.N2 ** 2 * setup.N3 ** 3
    weight = 2 * setup.k[0]
    if fixtures is None:
        fixtures = load_fixtures(level=level, weight=weight)
    if (fixtures.level, fixtures.weight) != (level, weight):
        raise FixtureIncomplete(f"fixtures are for level {fixtures.level}, weight {fixtures.weight}; need {level}, {weight}")
    if not fixtures.complete:
        raise FixtureIncomplete("fixture set does not account for the whole new space")
    eta = QuadraticCharacter(setup.disc_E)
    L_fin_exact, _ = L_one_eta(eta)
    S_prime = [pl.p for pl in places if pl.cls == "other" and pl.n_omega > 0]
    L_S = partial_euler(eta, 1, S_prime)
    L_fin = L_fin_exact / L_S
    L_cmp = L_fin * _L_inf_one_eta()
    rhs_fin = theorem_rhs(setup, L_fin)
    rhs_cmp = theorem_rhs(setup, L_cmp)

    eligible = [f for f in fixtures.forms if _eligible(f, setup)]
    report = {
        "setup": setup.to_json(),
        "level": level, "weight": weight,
        "eligible": len(eligible),
        "rhs_finite_eta": {"exact": str(rhs_fin), "float": float(rhs_fin)},
        "rhs_completed_eta": {"exact": str(rhs_cmp), "float": float(rhs_cmp)},
    }
    if not eligible:
        report.update(status="degenerate: LHS = 0", lhs_completed=0.0, lhs_finite=0.0, verdict="degenerate")
        return report
    chi = hecke_character_for(setup)
    report["theta"] = {str(q): a for q, a in chi.theta.items()}
    binom = binomial_factor(setup)
    k, m = setup.k[0], setup.m[0]
    g_bc = math.exp(float(np.real(log_gamma_factor(0.5, (), _bc_gamma(k, m)))))
    g_ad = math.exp(float(np.real(log_gamma_factor(1.0, (1,), (2 * k - 1,)))))
    per_form, lhs_fin, err = [], 0.0, 0.0
    for f in eligible:
        bc = afe_central_value(rankin_selberg_series(f, setup, chi, bc_cutoff), 0.5)
        ad = afe_central_value(adjoint_series(f, setup, ad_cutoff), 1.0)
        ratio = bc.value / ad.value
        lhs_fin += ratio
        err += abs(ratio) * (bc.error / max(abs(bc.value), 1e-300) + ad.error / abs(ad.value))
        per_form.append({"label": f.label, "L_half": bc.value, "L_one_Ad": ad.value,
                         "error": [bc.error, ad.error]})
    lhs_fin *= binom
    err *= binom
    lhs_cmp = lhs_fin * g_bc / g_ad
    dev_cmp = abs(lhs_cmp - float(rhs_cmp)) / abs(float(rhs_cmp))
    dev_fin_eta = abs(lhs_cmp - float(rhs_fin)) / abs(float(rhs_fin))
    report.update(
        lhs_completed=lhs_cmp,
        lhs_finite=lhs_fin,
        afe_error=float(err * g_bc / g_ad),
        deviation_completed=dev_cmp,
        deviation_vs_finite_eta=dev_fin_eta,
        ratio_rhs_finite_eta_to_lhs=float(rhs_fin) / lhs_cmp,
        decomposition={
            "L_inf(1,eta)": str(_L_inf_one_eta()),
            "rhs_finite/rhs_completed": str(rhs_fin / rhs_cmp),
            "gamma_bc(1/2)/gamma_Ad(1)": g_bc / g_ad,
        },
        per_form=per_form,
        verdict="agree" if dev_cmp <= tol else "disagree",
        seconds=time.time() - t0,
    )
    return report
