"""Truncated models of p-adic fields, their quadratic extensions and characters.

Conventions
-----------
* The p-adic layer works over F_v = Q_p (residue degree f = 1); finite residue
  fields GF(p^k) are available for any k.
* A quadratic algebra E_v = F_v[w]/(w^2 - t w + n) is described by (t, n):
  unramified: w = tau lifts a generator of k_E^x; ramified: w^2 = p;
  split: w^2 = 1, so that a + b w <-> (a + b, a - b) in F_v x F_v.
* Roots of unity are exponents in Q/Z (``Fraction`` mod 1): e(x) = exp(2 pi i x).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Hashable, Iterable, Sequence

from sympy import Poly, symbols

from .cyclo import Cyclo, root_of_unity

__all__ = [
    "PrecisionExhausted",
    "FiniteField",
    "LocalFieldDesc",
    "PadicElem",
    "QuadExt",
    "QElem",
    "ToricChar",
    "QuaternionModel",
    "QuatElem",
    "IwahoriModel",
    "field_ops",
    "quotient_reps",
    "char_value",
    "gauss_sum",
    "quotient_characters",
]


class PrecisionExhausted(ArithmeticError):
    """An operation needed digits beyond the working precision."""


# ---------------------------------------------------------------------------
# Finite fields
# ---------------------------------------------------------------------------

_X = symbols("x")


def _poly_order_of_x(p: int, coeffs: tuple[int, ...]) -> int:
    """Multiplicative order of x in F_p[x]/(monic poly with low-first coeffs)."""
    k = len(coeffs)
    q = p ** k
    one = tuple([1] + [0] * (k - 1))
    x = tuple([0, 1] + [0] * (k - 2)) if k > 1 else ((-coeffs[0]) % p,)
    cur = x
    for e in range(1, q):
        if cur == one:
            return e
        cur = _poly_mulmod(cur, x, coeffs, p)
    return q - 1 if cur == one else 0


def _poly_mulmod(a, b, modulus, p):
    k = len(modulus)
    prod = [0] * (2 * k - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d] % p
        if c:
            for i in range(k):
                prod[d - k + i] -= c * modulus[i]
        prod[d] = 0
    return tuple(c % p for c in prod[:k])


@lru_cache(maxsize=None)
def _primitive_modulus(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically smallest monic primitive polynomial of degree k over F_p.

    Returned as the k low-order coefficients (the leading 1 is implicit).
    Ordering compares (c_{k-1}, ..., c_0) as a tuple.
    """
    for top_first in itertools.product(range(p), repeat=k):
        coeffs = tuple(reversed(top_first))
        if coeffs[0] == 0:
            continue
        poly = Poly([1] + list(top_first), _X, modulus=p)
        if not poly.is_irreducible:
            continue
        if _poly_order_of_x(p, coeffs) == p ** k - 1:
            return coeffs
    raise ValueError(f"no primitive polynomial of degree {k} over F_{p}")


class FiniteField:
    """GF(p^k) with elements encoded as integers (base-p digits, low first).

    The modulus is the lexicographically smallest monic primitive polynomial,
    so the class of x is a canonical generator of the multiplicative group.
    """

    def __init__(self, p: int, k: int = 1):
        self.p, self.k, self.q = p, k, p ** k
        self.modulus = _primitive_modulus(p, k)
        self._exp: list[int] = []
        self._log: dict[int, int] = {}
        one = self.encode((1,))
        gen = self.encode((0, 1)) if k > 1 else (-self.modulus[0]) % p
        self.generator = gen
        cur = one
        for e in range(self.q - 1):
            self._exp.append(cur)
            self._log[cur] = e
            cur = self._mul_raw(cur, gen)

    def encode(self, digits: Sequence[int]) -> int:
        return sum((d % self.p) * self.p ** i for i, d in enumerate(digits))

    def decode(self, x: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.k):
            out.append(x % self.p)
            x //= self.p
        return tuple(out)

    def _mul_raw(self, a: int, b: int) -> int:
        return self.encode(_poly_mulmod(self.decode(a), self.decode(b), self.modulus, self.p))

    def elements(self) -> range:
        return range(self.q)

    def add(self, a: int, b: int) -> int:
        return self.encode([x + y for x, y in zip(self.decode(a), self.decode(b))])

    def neg(self, a: int) -> int:
        return self.encode([-x for x in self.decode(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e <= 0:
                raise ZeroDivisionError("0 has no inverse")
            return 0
        return self._exp[(self._log[a] * e) % (self.q - 1)]

    def inv(self, a: int) -> int:
        return self.pow(a, -1)

    def log(self, a: int) -> int:
        """Discrete log to the canonical generator."""
        if a == 0:
            raise ValueError("log of 0")
        return self._log[a]

    def exp(self, e: int) -> int:
        return self._exp[e % (self.q - 1)]

    def frobenius(self, a: int, times: int = 1) -> int:
        return self.pow(a, self.p ** times) if a else 0

    def trace_to_prime(self, a: int) -> int:
        s = 0
        cur = a
        for _ in range(self.k):
            s = self.add(s, cur)
            cur = self.frobenius(cur)
        d = self.decode(s)
        assert all(x == 0 for x in d[1:])
        return d[0]

    def from_int(self, n: int) -> int:
        return n % self.p

    def subfield(self, f: int) -> list[int]:
        """Elements of the subfield GF(p^f) (requires f | k)."""
        if self.k % f:
            raise ValueError("not a subfield")
        return [a for a in self.elements() if self.frobenius(a, f) == a]

    def quadratic_character(self, a: int) -> int:
        if a == 0:
            return 0
        return 1 if self.log(a) % 2 == 0 else -1


# ---------------------------------------------------------------------------
# p-adic numbers (F_v = Q_p)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalFieldDesc:
    p: int
    f: int = 1
    M: int = 6
    psi_conductor: int = 0

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("precision M must be at least 2")
        if self.f != 1:
            raise NotImplementedError("the p-adic layer is implemented for residue degree 1")

    @property
    def q(self) -> int:
        return self.p ** self.f

    @cached_property
    def residue_field(self) -> FiniteField:
        return FiniteField(self.p, self.f)

    def elem(self, x) -> "PadicElem":
        return PadicElem.from_rational(self.p, x, self.M)


@dataclass(frozen=True)
class PadicElem:
    """p^val * unit with the unit known modulo p^prec.

    prec == 0 marks an inexact zero O(p^val).
    """

    p: int
    val: int
    unit: int
    prec: int

    @classmethod
    def from_rational(cls, p: int, x, prec: int) -> "PadicElem":
        x = Fraction(x)
        if x == 0:
            return cls(p, prec, 0, 0)
        v = 0
        num, den = x.numerator, x.denominator
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        mod = p ** prec
        return cls(p, v, num * pow(den, -1, mod) % mod, prec)

    @classmethod
    def zero(cls, p: int, abs_prec: int) -> "PadicElem":
        return cls(p, abs_prec, 0, 0)

    # -- inspection -----------------------------------------------------
    @property
    def is_inexact_zero(self) -> bool:
        return self.prec == 0

    @property
    def abs_prec(self) -> int:
        return self.val + self.prec

    def valuation(self) -> int:
        if self.prec == 0:
            raise PrecisionExhausted(f"valuation of O({self.p}^{self.val}) is undetermined")
        return self.val

    def valuation_at_least(self, k: int) -> bool:
        """Certified test v(x) >= k."""
        if self.prec == 0:
            if self.val >= k:
                return True
            raise PrecisionExhausted(f"cannot decide v(x) >= {k} for O({self.p}^{self.val})")
        return self.val >= k

    def residue_mod(self, k: int) -> int:
        """x mod p^k as an integer in [0, p^k), for x integral."""
        if self.prec == 0:
            if self.val >= k:
                return 0
            raise PrecisionExhausted("residue of an inexact zero")
        if self.val < 0:
            raise ValueError("element is not integral")
        if self.val >= k:
            return 0
        if self.abs_prec < k:
            raise PrecisionExhausted(f"need {k} digits, have {self.abs_prec}")
        return (self.unit * self.p ** self.val) % self.p ** k

    # -- arithmetic -----------------------------------------------------
    def _as_pair(self, m: int, n: int) -> int:
        # integer X with self = p^m * X mod p^n (requires m <= val)
        return self.unit * self.p ** (self.val - m) % self.p ** (n - m) if self.prec else 0

    def __add__(self, other):
        other = self._coerce(other)
        n = min(self.abs_prec, other.abs_prec)
        m = min(self.val, other.val)
        if m >= n:
            return PadicElem.zero(self.p, n)
        s = (self._as_pair(m, n) + other._as_pair(m, n)) % self.p ** (n - m)
        if s == 0:
            return PadicElem.zero(self.p, n)
        v = 0
        while s % self.p == 0:
            s //= self.p
            v += 1
        prec = n - m - v
        return PadicElem(self.p, m + v, s % self.p ** prec, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.prec == 0:
            return self
        return PadicElem(self.p, self.val, (-self.unit) % self.p ** self.prec, self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.prec == 0 or other.prec == 0:
            lo_self = self.val
            lo_other = other.val
            return PadicElem.zero(self.p, lo_self + lo_other)
        prec = min(self.prec, other.prec)
        return PadicElem(self.p, self.val + other.val, self.unit * other.unit % self.p ** prec, prec)

    __rmul__ = __mul__

    def inv(self) -> "PadicElem":
        if self.prec == 0:
            raise PrecisionExhausted("inverse of an inexact zero")
        return PadicElem(self.p, -self.val, pow(self.unit, -1, self.p ** self.prec), self.prec)

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        out = PadicElem.from_rational(self.p, 1, max(self.prec, 1) if self.prec else 1)
        if self.prec == 0:
            return PadicElem.zero(self.p, self.val * e) if e else out
        out = PadicElem(self.p, 0, 1, self.prec)
        for _ in range(e):
            out = out * self
        return out

    def _coerce(self, x) -> "PadicElem":
        if isinstance(x, PadicElem):
            return x
        # exact integers/rationals get the precision of self (at least 1)
        return PadicElem.from_rational(self.p, x, max(self.prec, 1) + max(0, -self.val) + 64)

    def teichmuller_residue(self) -> int:
        if self.prec == 0 or self.val != 0:
            raise ValueError("not a unit")
        return self.unit % self.p

    def sqrt(self) -> "PadicElem":
        """Square root of a unit square (p odd) by Hensel lifting."""
        if self.prec == 0 or self.val % 2:
            raise ValueError("not a square")
        p = self.p
        r0 = next((r for r in range(1, p) if (r * r - self.unit) % p == 0), None)
        if r0 is None:
            raise ValueError("not a square")
        mod = p ** self.prec
        r = r0
        for _ in range(self.prec.bit_length() + 1):
            r = (r - (r * r - self.unit) * pow(2 * r, -1, mod)) % mod
        return PadicElem(p, self.val // 2, r, self.prec)

    def __eq__(self, other):
        if not isinstance(other, PadicElem):
            return NotImplemented
        if self.prec == 0 or other.prec == 0:
            return self.prec == other.prec == 0 and self.val == other.val
        prec = min(self.prec, other.prec)
        return self.val == other.val and (self.unit - other.unit) % self.p ** prec == 0

    def __hash__(self):
        return hash((self.p, self.val, self.unit % self.p if self.prec else -1))

    def __str__(self):
        if self.prec == 0:
            return f"O(ϖ^{self.val})"
        digits = []
        u = self.unit
        for _ in range(self.prec):
            digits.append(u % self.p)
            u //= self.p
        body = " + ".join(f"{d}ϖ^{i}" if i else f"{d}" for i, d in enumerate(digits) if d or i == 0)
        return f"ϖ^{self.val} * ({body} + O(ϖ^{self.prec}))"


# ---------------------------------------------------------------------------
# Quadratic algebras over Q_p
# ---------------------------------------------------------------------------


class QuadExt:
    """E_v = F_v[w]/(w^2 - t w + n): kind in {unramified, ramified, split}."""

    KINDS = ("unramified", "ramified", "split")

    def __init__(self, base: LocalFieldDesc, kind: str):
        if kind not in self.KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        if base.p == 2:
            raise NotImplementedError("residue characteristic 2 is not supported")
        self.base, self.kind = base, kind
        p = base.p
        if kind == "unramified":
            self.residue_field = FiniteField(p, 2)
            c0, c1 = self.residue_field.modulus
            # w^2 + c1 w + c0 = 0  =>  w^2 = t w - n with t = -c1, n = c0
            self.t, self.n = (-c1) % p, c0
        elif kind == "ramified":
            self.t, self.n = 0, -p
        else:
            self.t, self.n = 0, -1
        self.e = 2 if kind == "ramified" else 1

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def q(self) -> int:
        return self.base.q

    @property
    def M(self) -> int:
        return self.base.M

    def __repr__(self):
        return f"QuadExt(p={self.p}, kind={self.kind}, M={self.M})"

    def __eq__(self, other):
        return isinstance(other, QuadExt) and (self.base, self.kind) == (other.base, other.kind)

    def __hash__(self):
        return hash((self.base, self.kind))

    def elem(self, a, b=0) -> "QElem":
        f = self.base.elem
        return QElem(self, a if isinstance(a, PadicElem) else f(a), b if isinstance(b, PadicElem) else f(b))

    def one(self) -> "QElem":
        return self.elem(1, 0)

    def uniformizer(self) -> "QElem":
        """Prime element of E (w for ramified, p otherwise)."""
        return self.elem(0, 1) if self.kind == "ramified" else self.elem(self.p, 0)

    def from_components(self, s1, s2) -> "QElem":
        """Split algebra only: the element with components (s1, s2)."""
        if self.kind != "split":
            raise ValueError("components only exist for the split algebra")
        # extra digits: the (a, b) basis mixes components of different valuations
        f = lambda x: PadicElem.from_rational(self.p, x, self.M + 32)
        s1 = s1 if isinstance(s1, PadicElem) else f(s1)
        s2 = s2 if isinstance(s2, PadicElem) else f(s2)
        half = f(Fraction(1, 2))
        return QElem(self, (s1 + s2) * half, (s1 - s2) * half)

    def eta(self, x: int) -> int:
        """Local quadratic character eta_v on an element of Z_p - {0} (given as an integer)."""
        p = self.p
        if self.kind == "split":
            return 1
        v = 0
        while x % p == 0:
            x //= p
            v += 1
        if self.kind == "unramified":
            return (-1) ** v
        # ramified, E = Q_p(sqrt p): eta(p) = eta(-(-p)) = (-1/p) since -p is a norm
        leg = lambda a: 1 if pow(a % p, (p - 1) // 2, p) == 1 else -1
        return leg(x) * leg(-1) ** v

    @property
    def L1eta(self) -> Fraction:
        """L(1, eta_v) for the residue field size q."""
        q = self.q
        return {"unramified": Fraction(q, q + 1), "ramified": Fraction(1), "split": Fraction(q, q - 1)}[self.kind]


@dataclass(frozen=True)
class QElem:
    ext: QuadExt
    a: PadicElem
    b: PadicElem

    def _c(self, x) -> "QElem":
        if isinstance(x, QElem):
            return x
        return self.ext.elem(x, 0)

    def __add__(self, o):
        o = self._c(o)
        return QElem(self.ext, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QElem(self.ext, -self.a, -self.b)

    def __sub__(self, o):
        return self + (-self._c(o))

    def __mul__(self, o):
        o = self._c(o)
        t, n = self.ext.t, self.ext.n
        # (a + b w)(c + d w) = ac + (ad + bc) w + bd (t w - n)
        bd = self.b * o.b
        return QElem(self.ext, self.a * o.a - bd * n, self.a * o.b + self.b * o.a + bd * t)

    __rmul__ = __mul__

    def conj(self) -> "QElem":
        return QElem(self.ext, self.a + self.b * self.ext.t, -self.b)

    def norm(self) -> PadicElem:
        a, b = self.a, self.b
        return a * a + a * b * self.ext.t + b * b * self.ext.n

    def trace(self) -> PadicElem:
        return self.a * 2 + self.b * self.ext.t

    def inv(self) -> "QElem":
        nm = self.norm().inv()
        c = self.conj()
        return QElem(self.ext, c.a * nm, c.b * nm)

    def __truediv__(self, o):
        return self * self._c(o).inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        out = self.ext.one()
        for _ in range(e):
            out = out * self
        return out

    def components(self) -> tuple[PadicElem, PadicElem]:
        if self.ext.kind != "split":
            raise ValueError("components only exist for the split algebra")
        return self.a + self.b, self.a - self.b

    def valuation(self) -> int:
        """Normalized valuation v_E (split: raises; use components)."""
        kind = self.ext.kind
        if kind == "split":
            raise ValueError("the split algebra has no single valuation")
        va = _lower_val(self.a)
        vb = _lower_val(self.b)
        if kind == "unramified":
            cands = [va, vb]
        else:
            cands = [(2 * va[0], va[1]), (2 * vb[0] + 1, vb[1])]
        exact = [v for v, ex in cands if ex]
        lower = min(v for v, _ in cands)
        if exact and min(exact) <= lower:
            return min(exact)
        raise PrecisionExhausted("valuation of an element indistinguishable from 0")

    def is_integral(self) -> bool:
        if self.ext.kind == "split":
            c1, c2 = self.components()
            return c1.valuation_at_least(0) and c2.valuation_at_least(0)
        return self.a.valuation_at_least(0) and self.b.valuation_at_least(0)

    def unit_digits(self, r: int) -> tuple[int, int]:
        """(a mod p^r, b mod p^r) for an integral element."""
        return self.a.residue_mod(r), self.b.residue_mod(r)

    def __eq__(self, other):
        if not isinstance(other, QElem):
            return NotImplemented
        return self.ext == other.ext and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __str__(self):
        w = {"unramified": "τ", "ramified": "ϖ_E", "split": "w"}[self.ext.kind]
        return f"[{self.a}] + [{self.b}]*{w}"


def _lower_val(x: PadicElem) -> tuple[int, bool]:
    return (x.val, x.prec > 0)


# ---------------------------------------------------------------------------
# Quotients of E^x by F^x and unit filtrations
# ---------------------------------------------------------------------------


def unit_normal_form(e: QElem) -> tuple[int, QElem]:
    """Split e = w_E^j * u with u a unit (non-split kinds)."""
    ext = e.ext
    j = e.valuation()
    if ext.kind == "unramified":
        return j, e * ext.elem(Fraction(1, ext.p ** j) if j >= 0 else ext.p ** (-j))
    pi_e = ext.uniformizer()
    return j, e * pi_e ** (-j)


def toric_key(e: QElem, r: int) -> Hashable:
    """Canonical label of the class of e in E^x / F^x U_E^r (r in E-valuation units)."""
    ext, p = e.ext, e.ext.p
    if ext.kind == "split":
        c1, c2 = e.components()
        s = c1 / c2
        v = s.valuation()
        u = s * PadicElem.from_rational(p, Fraction(1, p ** v) if v >= 0 else p ** (-v), s.prec + 64)
        return ("s", v, u.residue_mod(r) if r > 0 else 0)
    j, u = unit_normal_form(e)
    if ext.kind == "unramified":
        if r == 0:
            return ("u",)
        a, b = u.unit_digits(r)
        mod = p ** r
        if a % p:
            return ("u", 1, b * pow(a, -1, mod) % mod)
        return ("u", a * pow(b, -1, mod) % mod, 1)
    # ramified: u = a + b w with a a unit
    rb = r // 2
    a, b = u.unit_digits(max(rb, 1))
    mod = p ** rb
    bb = b * pow(a, -1, p ** max(rb, 1)) % mod if rb else 0
    return ("r", j % 2, bb)


def unit_reps(ext: QuadExt, r: int) -> list[QElem]:
    """Representatives of U_E / U_E^r."""
    p = ext.p
    if ext.kind == "ramified":
        ra, rb = (r + 1) // 2, r // 2
        return [ext.elem(a, b) for a in range(max(p ** ra, 1)) if a % p or ra == 0
                for b in range(p ** rb)] if r > 0 else [ext.one()]
    if r == 0:
        return [ext.one()]
    out = []
    for a in range(p ** r):
        for b in range(p ** r):
            e = ext.elem(a, b)
            if ext.kind == "split":
                c1, c2 = e.components()
                if c1.residue_mod(1) and c2.residue_mod(1):
                    out.append(e)
            elif (a % p, b % p) != (0, 0):
                out.append(e)
    return out


def quotient_reps(ext: QuadExt, subgroup: str, n: int, window: int | None = None) -> list[QElem]:
    """Coset representatives.

    subgroup:
      * ``Ex_mod_Fx_UEn`` -- E^x / F^x U_E^n (split kind needs a valuation ``window``)
      * ``E1_mod_UEn``    -- E^1 / (E^1 cap U_E^n), returned as genuine norm-one elements
      * ``UF_mod_UEn``    -- U_F / (U_F cap U_E^n)
    n is in E-valuation units (U_E^n = 1 + p_E^n).
    """
    if n > ext.M - 1:
        raise PrecisionExhausted(f"level {n} exceeds working precision {ext.M}")
    p = ext.p
    if subgroup == "UF_mod_UEn":
        k = -(-n // ext.e) if ext.kind != "split" else n
        if k == 0:
            return [ext.one()]
        return [ext.elem(a) for a in range(p ** k) if a % p]
    if subgroup == "Ex_mod_Fx_UEn":
        if ext.kind == "split":
            if window is None:
                raise ValueError("split quotient is infinite; pass a valuation window")
            units = [a for a in range(max(p ** n, 1)) if a % p or n == 0] if n else [1]
            return [ext.from_components(Fraction(p) ** v * u, 1) for v in range(-window, window + 1) for u in units]
        seen: dict = {}
        extra = [ext.one(), ext.uniformizer()] if ext.kind == "ramified" else [ext.one()]
        for pre in extra:
            for u in unit_reps(ext, n):
                e = pre * u
                key = toric_key(e, n)
                seen.setdefault(key, e)
        return [seen[k] for k in sorted(seen, key=repr)]
    if subgroup == "E1_mod_UEn":
        if ext.kind == "split":
            raise ValueError("E^1 of the split algebra is not compact")
        if n == 0:
            return [ext.one()]
        c = n if ext.kind == "unramified" else -(-n // 2)
        out: dict = {}
        for u in unit_reps(ext, n):
            nm = u.norm()
            if nm.residue_mod(c) != 1 % p ** c:
                continue
            w = u * ext.elem(nm.sqrt().inv())
            key = _unit_key(w, n)
            out.setdefault(key, w)
        return [out[k] for k in sorted(out)]
    raise ValueError(f"unknown subgroup {subgroup!r}")


def _unit_key(u: QElem, n: int) -> tuple:
    """Class of a unit modulo U_E^n."""
    if u.ext.kind == "ramified":
        ra, rb = (n + 1) // 2, n // 2
        return (u.a.residue_mod(ra), u.b.residue_mod(rb))
    return u.unit_digits(n)


def field_ops(x, y, op: str):
    """Dispatch helper over PadicElem / QElem values."""
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "inv":
        return x.inv()
    if op == "norm":
        return x.norm() if isinstance(x, QElem) else x * x
    if op == "trace":
        return x.trace() if isinstance(x, QElem) else x * 2
    if op == "conj":
        return x.conj() if isinstance(x, QElem) else x
    if op == "valuation":
        return x.valuation()
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Characters of E^x trivial on F^x
# ---------------------------------------------------------------------------


def _psi_tilde_exp(p: int, y: int) -> Fraction:
    """Exponent of psi~(y) = e(y / p) on k_F = Z/p."""
    return Fraction(y % p, p)


@dataclass(frozen=True)
class ToricChar:
    """A character Omega of E^x with Omega|F^x = 1, given by an exponent function.

    ``level`` is "0", "1/2" or "generic"; ``data`` records the defining
    parameters; ``r`` is a level (E-units) such that Omega is trivial on U_E^r.
    """

    ext: QuadExt
    level: str
    data: tuple
    r: int
    _fn: Callable[[QElem], Fraction] = field(compare=False, repr=False)

    def __call__(self, x: QElem) -> Fraction:
        return self._fn(x) % 1

    def value(self, x: QElem) -> Cyclo:
        return root_of_unity(self(x))

    # -- constructors ---------------------------------------------------
    @classmethod
    def trivial(cls, ext: QuadExt) -> "ToricChar":
        return cls(ext, "generic", ("trivial",), 0, lambda x: Fraction(0))

    @classmethod
    def level0(cls, ext: QuadExt, a: int) -> "ToricChar":
        """theta_a: tau -> e(a/(q^2-1)) on k_E^x, trivial on the uniformizer p."""
        if ext.kind != "unramified":
            raise ValueError("level-0 characters live on the unramified extension")
        q2 = ext.q ** 2 - 1
        gf = ext.residue_field

        def fn(x: QElem) -> Fraction:
            _, u = unit_normal_form(x)
            a0, b0 = u.unit_digits(1)
            res = gf.encode((a0, b0))
            return Fraction(a * gf.log(res), q2)

        return cls(ext, "0", (a % q2,), 1, fn)

    @classmethod
    def level_half(cls, ext: QuadExt, sign: int, beta: int) -> "ToricChar":
        """theta_{sign,2beta}: w_E -> sign, 1 + y w_E -> psi~(2 beta y)."""
        if ext.kind != "ramified":
            raise ValueError("level-1/2 characters live on the ramified extension")
        p = ext.p

        def fn(x: QElem) -> Fraction:
            j, u = unit_normal_form(x)
            a0, b0 = u.a.residue_mod(1), u.b.residue_mod(1)
            y = b0 * pow(a0, -1, p) % p
            return Fraction(0 if sign == 1 else j, 2) + _psi_tilde_exp(p, 2 * beta * y)

        return cls(ext, "1/2", (sign, beta % p), 2, fn)

    @classmethod
    def unramified_sign(cls, ext: QuadExt, sign: int) -> "ToricChar":
        """Ramified E, Omega trivial on U_E with Omega(w_E) = sign."""
        if ext.kind != "ramified":
            raise ValueError("only for the ramified extension")

        def fn(x: QElem) -> Fraction:
            j, _ = unit_normal_form(x)
            return Fraction(0 if sign == 1 else j, 2)

        return cls(ext, "generic", ("sign", sign), 0, fn)

    @classmethod
    def split(cls, ext: QuadExt, pi_exp: Fraction, unit_exp: int, r: int) -> "ToricChar":
        """Omega(s1, s2) = mu(s1/s2), mu(p) = e(pi_exp), mu(g) = e(unit_exp / phi(p^r))
        with g the least primitive root modulo p^r."""
        if ext.kind != "split":
            raise ValueError("only for the split algebra")
        p = ext.p
        order = (p - 1) * p ** (r - 1) if r > 0 else 1
        g = _primitive_root_mod(p, r) if r > 0 else 1
        logs = _dlog_table(p, r, g) if r > 0 else {}

        def fn(x: QElem) -> Fraction:
            c1, c2 = x.components()
            s = c1 / c2
            v = s.valuation()
            out = Fraction(pi_exp) * v
            if r > 0:
                u = s * PadicElem.from_rational(p, Fraction(1, p ** v) if v >= 0 else p ** (-v), s.prec + 64)
                out += Fraction(unit_exp * logs[u.residue_mod(r)], order)
            return out

        return cls(ext, "generic", ("split", Fraction(pi_exp) % 1, unit_exp % order), r, fn)

    @classmethod
    def from_table(cls, ext: QuadExt, r: int, table: dict, label: tuple = ()) -> "ToricChar":
        def fn(x: QElem) -> Fraction:
            return table[toric_key(x, r)]

        return cls(ext, "generic", ("table", r) + label, r, fn)

    # -- conductor ------------------------------------------------------
    @cached_property
    def n_omega(self) -> int:
        """Least n with Omega trivial on (o + p^n o_E)^x (brute force modulo U_E^r)."""
        ext, p = self.ext, self.ext.p
        for n in range(0, self.r + 2):
            depth = max(self.r, 1)
            ok = True
            for a in range(1, p ** depth):
                if a % p == 0:
                    continue
                for b in range(p ** depth):
                    e = ext.elem(a, b * p ** n)
                    if ext.kind == "split":
                        c1, c2 = e.components()
                        if not (c1.residue_mod(1) and c2.residue_mod(1)):
                            continue
                    if self(e) != 0:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return n
        raise RuntimeError("conductor search failed")

    def conductor_exponent_c(self) -> int:
        """v_F of the norm of the conductor of Omega (c(Omega_v) = q^this)."""
        n = self.n_omega
        if self.ext.kind == "ramified":
            # smallest f with Omega trivial on U_E^f
            for f in range(0, 2 * n + 1):
                if all(self(u) == 0 for u in _units_in_filtration(self.ext, f, max(2 * n, 1))):
                    return f
        return 2 * n


def _units_in_filtration(ext: QuadExt, f: int, depth: int) -> list[QElem]:
    out = []
    for u in unit_reps(ext, depth):
        if f == 0:
            out.append(u)
            continue
        d = u - ext.one()
        try:
            if d.valuation() >= f:
                out.append(u)
        except PrecisionExhausted:
            out.append(u)
    return out


@lru_cache(maxsize=None)
def _primitive_root_mod(p: int, r: int) -> int:
    mod = p ** r
    order = (p - 1) * p ** (r - 1)
    for g in range(2, mod):
        if g % p == 0:
            continue
        if all(pow(g, order // ell, mod) != 1 for ell in _prime_factors(order)):
            return g
    raise ValueError("no primitive root")


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def _dlog_table(p: int, r: int, g: int) -> dict[int, int]:
    mod = p ** r
    out, cur = {}, 1
    for e in range((p - 1) * p ** (r - 1)):
        out[cur] = e
        cur = cur * g % mod
    return out


def char_value(chi: ToricChar, x: QElem) -> tuple[int, int]:
    """Omega(x) as an exponent pair (numerator, order): e(numerator/order)."""
    fr = chi(x)
    return fr.numerator, fr.denominator


def quotient_characters(ext: QuadExt, r: int) -> list[ToricChar]:
    """All characters of the finite group E^x / F^x U_E^r (non-split kinds).

    The group structure is found by brute force: a chain of generators with
    relations, then every consistent assignment of exponents.
    """
    reps = quotient_reps(ext, "Ex_mod_Fx_UEn", r)
    keys = [toric_key(e, r) for e in reps]
    elem_of = dict(zip(keys, reps))
    one_key = toric_key(ext.one(), r)

    def mul(k1, k2):
        return toric_key(elem_of[k1] * elem_of[k2], r)

    # generator chain
    gens: list = []
    span = {one_key: ()}
    rel: list = []
    for k in keys:
        if k in span:
            continue
        # order of k modulo current span
        e, cur = 1, k
        while cur not in span:
            cur = mul(cur, k)
            e += 1
        rel.append((e, span[cur]))
        new_span = {}
        for base, exps in span.items():
            acc = base
            for i in range(e):
                new_span.setdefault(acc, exps + (i,))
                acc = mul(acc, k)
        gens.append(k)
        span = new_span
        span = {kk: tuple(list(v) + [0] * (len(gens) - len(v))) for kk, v in span.items()}
    # characters: chi(g_i) = x_i (in Q/Z) with e_i x_i = sum_j c_j x_j
    solutions = [[]]
    for i, (e, coeffs) in enumerate(rel):
        nxt = []
        for sol in solutions:
            rhs = sum((Fraction(c) * sol[j] for j, c in enumerate(coeffs)), Fraction(0))
            for t in range(e):
                nxt.append(sol + [((rhs + t) / e) % 1])
        solutions = nxt
    chars = []
    for idx, sol in enumerate(solutions):
        table = {}
        for k, exps in span.items():
            table[k] = sum((Fraction(x) * s for x, s in zip(exps, sol)), Fraction(0)) % 1
        chars.append(ToricChar.from_table(ext, r, table, (idx,)))
    return chars


def gauss_sum(q: int, p: int | None = None) -> tuple[Cyclo, complex]:
    """tau(eta, psi~) = sum_{x in k^x} eta(x) e(Tr(x)/p) over k = GF(q)."""
    if p is None:
        p = _prime_factors(q)[0]
    k = round(math.log(q, p))
    gf = FiniteField(p, k)
    exps: dict[int, int] = {}
    for x in gf.elements():
        if x == 0:
            continue
        t = gf.trace_to_prime(x)
        exps[t] = exps.get(t, 0) + gf.quadratic_character(x)
    tau = Cyclo.from_exponents(p, exps)
    return tau, tau.to_complex()


# ---------------------------------------------------------------------------
# Quaternion and Iwahori models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuatElem:
    model: "QuaternionModel"
    alpha: QElem
    beta: QElem

    def __mul__(self, o: "QuatElem") -> "QuatElem":
        eps = self.model.eps
        a, b, c, d = self.alpha, self.beta, o.alpha, o.beta
        return QuatElem(self.model, a * c + b * d.conj() * eps, a * d + b * c.conj())

    def nrd(self) -> PadicElem:
        return self.alpha.norm() - self.beta.norm() * self.model.eps_f

    def scale(self, lam: PadicElem) -> "QuatElem":
        l = self.model.ext.elem(lam)
        return QuatElem(self.model, self.alpha * l, self.beta * l)


class QuaternionModel:
    """D = {(alpha, beta)} ~ [[alpha, eps beta], [conj beta, conj alpha]]."""

    def __init__(self, ext: QuadExt, eps):
        self.ext = ext
        self.eps = eps if isinstance(eps, QElem) else ext.elem(eps)
        self.eps_f = self.eps.a

    def elem(self, alpha: QElem, beta: QElem) -> QuatElem:
        return QuatElem(self, alpha, beta)

    def torus(self, t: QElem) -> QuatElem:
        return QuatElem(self, t, self.ext.elem(0))

    def gamma(self, x: QElem) -> QuatElem:
        """The orbit representative [[1, eps x], [conj x, 1]]."""
        return QuatElem(self, self.ext.one(), x)

    def uniformizer(self) -> QuatElem:
        return QuatElem(self, self.ext.elem(0), self.ext.one())

    def v_D(self, g: QuatElem) -> int:
        return g.nrd().valuation()


Mat = tuple  # (m11, m12, m21, m22) of PadicElem


class IwahoriModel:
    """M_2(F_v) with the Iwahori order J = [[o, o], [p, o]] and w_J = [[0, 1], [p, 0]]."""

    def __init__(self, ext: QuadExt):
        if ext.kind != "ramified":
            raise ValueError("the Iwahori model pairs with the ramified extension")
        self.ext = ext
        self.p = ext.p
        f = ext.base.elem
        self.zero, self.one = f(0), f(1)
        self.w_J: Mat = (self.zero, self.one, f(self.p), self.zero)

    @staticmethod
    def mul(x: Mat, y: Mat) -> Mat:
        return (
            x[0] * y[0] + x[1] * y[2],
            x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3],
        )

    @staticmethod
    def det(x: Mat) -> PadicElem:
        return x[0] * x[3] - x[1] * x[2]

    def embed(self, e: QElem) -> Mat:
        """a + b w_E -> [[a, b], [p b, a]] (so w_E -> w_J)."""
        return (e.a, e.b, e.b * self.p, e.a)

    def from_quaternion(self, g: QuatElem) -> Mat:
        """The split model with eps = 1: diag(w_E, -w_E) -> w_J, [[0,1],[1,0]] -> diag(1,-1)."""
        a, b = g.alpha.a, g.alpha.b
        c, d = g.beta.a, g.beta.b
        return (a + c, b - d, (b + d) * self.p, a - c)

    def w_J_power(self, m: int) -> Mat:
        """w_J^m (w_J^2 = p I)."""
        f = self.ext.base.elem
        half, odd = divmod(m, 2)
        scal = f(Fraction(self.p) ** half)
        base = self.w_J if odd else (self.one, self.zero, self.zero, self.one)
        return tuple(x * scal for x in base)

    def decompose(self, g: Mat):
        """Write g = w_J^m * kappa * X * u (kappa in mu(q-1), X = I + [[0, a], [p b, 0]], u in U_J^2).

        Returns (m, kappa_residue, a, b) or None when g is not in E^x U_J^1.
        """
        m = self.det(g).valuation()
        h = self.mul(self.w_J_power(-m), g)
        if not (h[0].valuation_at_least(0) and h[1].valuation_at_least(0)
                and h[2].valuation_at_least(1) and h[3].valuation_at_least(0)):
            return None
        k11, k22 = h[0].residue_mod(1), h[3].residue_mod(1)
        if k11 == 0 or k11 != k22:
            return None
        x = tuple(c * self.ext.base.elem(Fraction(1, 1)) / k11 for c in h)
        # x = kappa^{-1} h up to U_J^2 since kappa == k11 mod p; read the U_J^1/U_J^2 coordinates
        a = x[1].residue_mod(1)
        b = (x[2] * self.ext.base.elem(Fraction(1, self.p))).residue_mod(1)
        return m, k11, a, b

    def in_U_J1(self, g: Mat) -> bool:
        return (
            (g[0] - 1).valuation_at_least(1)
            and g[1].valuation_at_least(0)
            and g[2].valuation_at_least(1)
            and (g[3] - 1).valuation_at_least(1)
        )
