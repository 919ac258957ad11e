"""Exact scalars: rational combinations of sqrt(d) * pi^n * (formal symbol monomial).

Every closed-form volume, orbital integral and global constant in the package
is carried as an :class:`ExactScalar` so that identities can be checked by
canonical-form equality instead of floating point comparison.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

from sympy import factorint

__all__ = [
    "ExactScalar",
    "DivisionByZero",
    "NonExactDivision",
    "UnboundSymbol",
    "squarefree_split",
    "exact_arith",
    "exact_to_float",
    "ONE",
    "ZERO",
    "PI",
]

Number = Union[int, Fraction]
SymbolMonomial = tuple  # sorted tuple of (name, exponent) with exponent != 0
TermKey = tuple  # (radicand, pi_power, SymbolMonomial)


class DivisionByZero(ZeroDivisionError):
    pass


class NonExactDivision(ArithmeticError):
    """The quotient is not representable as an ExactScalar."""


class UnboundSymbol(KeyError):
    pass


@lru_cache(maxsize=4096)
def squarefree_split(n: int) -> tuple[int, int]:
    """Return (c, d) with n = c**2 * d and d square-free."""
    if n <= 0:
        raise ValueError(f"radicand must be positive, got {n}")
    c, d = 1, 1
    for p, e in factorint(n).items():
        c *= p ** (e // 2)
        if e % 2:
            d *= p
    return c, d


def _mul_symbols(a: SymbolMonomial, b: SymbolMonomial, sign: int = 1) -> SymbolMonomial:
    out = dict(a)
    for name, e in b:
        out[name] = out.get(name, 0) + sign * e
    return tuple(sorted((k, v) for k, v in out.items() if v != 0))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class ExactScalar:
    """Finite sum  sum_k c_k * sqrt(d_k) * pi^{n_k} * S_k  in canonical form.

    Keys are ``(d, n, S)`` with ``d`` square-free positive, ``n`` an integer and
    ``S`` a sorted tuple of ``(symbol, exponent)``.  Zero coefficients are never
    stored, so equality is plain dictionary equality.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[TermKey, Number] | None = None):
        clean: dict[TermKey, Fraction] = {}
        for key, c in (terms or {}).items():
            c = _as_fraction(c)
            if c:
                d, n, syms = key
                if d != 1:
                    s, d = squarefree_split(d)
                    c *= s
                key = (d, n, tuple(sorted((k, v) for k, v in syms if v)))
                clean[key] = clean.get(key, Fraction(0)) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def rational(cls, x: Number) -> "ExactScalar":
        return cls({(1, 0, ()): _as_fraction(x)})

    @classmethod
    def sqrt(cls, x: Number) -> "ExactScalar":
        """sqrt of a non-negative rational."""
        x = _as_fraction(x)
        if x < 0:
            raise ValueError("square roots of negative numbers are not supported")
        if x == 0:
            return cls()
        # sqrt(a/b) = sqrt(a*b)/b
        c, d = squarefree_split(x.numerator * x.denominator)
        return cls({(d, 0, ()): Fraction(c, x.denominator)})

    @classmethod
    def pi(cls, n: int = 1) -> "ExactScalar":
        return cls({(1, n, ()): 1})

    @classmethod
    def symbol(cls, name: str, exponent: int = 1) -> "ExactScalar":
        return cls({(1, 0, ((name, exponent),)): 1})

    @classmethod
    def coerce(cls, x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        return cls.rational(x)

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> dict[TermKey, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_rational(self) -> bool:
        return self.is_zero() or (len(self._terms) == 1 and (1, 0, ()) in self._terms)

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._terms.get((1, 0, ()), Fraction(0))

    def symbols(self) -> set[str]:
        return {name for (_, _, syms) in self._terms for name, _ in syms}

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = self.coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return ExactScalar(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self.coerce(other))

    def __rsub__(self, other):
        return self.coerce(other) - self

    def __mul__(self, other):
        other = self.coerce(other)
        out: dict[TermKey, Fraction] = {}
        for (d1, n1, s1), c1 in self._terms.items():
            for (d2, n2, s2), c2 in other._terms.items():
                g = math.gcd(d1, d2)
                # sqrt(d1) sqrt(d2) = g * sqrt(d1 d2 / g^2)
                key = ((d1 // g) * (d2 // g), n1 + n2, _mul_symbols(s1, s2))
                out[key] = out.get(key, Fraction(0)) + c1 * c2 * g
        return ExactScalar(out)

    __rmul__ = __mul__

    def _inverse_monomial(self) -> "ExactScalar":
        ((d, n, syms), c), = self._terms.items()
        # 1/(c sqrt(d)) = sqrt(d)/(c d)
        return ExactScalar({(d, -n, tuple((k, -v) for k, v in syms)): 1 / (c * d)})

    def __truediv__(self, other):
        other = self.coerce(other)
        if other.is_zero():
            raise DivisionByZero("division by the zero ExactScalar")
        if other.is_monomial():
            return self * other._inverse_monomial()
        return self._long_divide(other)

    def __rtruediv__(self, other):
        return self.coerce(other) / self

    def _long_divide(self, other: "ExactScalar") -> "ExactScalar":
        # Non-monomial divisors are only accepted when the quotient is rational.
        if self.is_zero():
            return ExactScalar()
        if set(self._terms) == set(other._terms):
            ratios = {self._terms[k] / other._terms[k] for k in self._terms}
            if len(ratios) == 1:
                return ExactScalar.rational(ratios.pop())
        raise NonExactDivision(f"({self}) / ({other}) is not an exact quotient")

    def __pow__(self, e: int):
        if not isinstance(e, int):
            raise TypeError("only integer powers are supported")
        if e < 0:
            if not self.is_monomial():
                raise NonExactDivision("negative powers need a monomial base")
            return self._inverse_monomial() ** (-e)
        out = ExactScalar.rational(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    # -- comparison / hashing ------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExactScalar.rational(other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # -- substitution / evaluation -------------------------------------
    def subs(self, bindings: Mapping[str, "ExactScalar | Number"]) -> "ExactScalar":
        """Replace formal symbols by exact values (partial substitution allowed)."""
        out = ExactScalar()
        for (d, n, syms), c in self._terms.items():
            term = ExactScalar({(d, n, tuple((k, v) for k, v in syms if k not in bindings)): c})
            for k, v in syms:
                if k in bindings:
                    term = term * (ExactScalar.coerce(bindings[k]) ** v)
            out = out + term
        return out

    def to_float(self, bindings: Mapping[str, float] | None = None) -> float:
        bindings = bindings or {}
        parts = []
        for key in sorted(self._terms):
            d, n, syms = key
            val = float(self._terms[key]) * math.sqrt(d) * math.pi ** n
            for name, e in syms:
                if name not in bindings:
                    raise UnboundSymbol(name)
                val *= float(bindings[name]) ** e
            parts.append(val)
        return math.fsum(parts)

    def __float__(self):
        return self.to_float()

    # -- rendering ------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for key in sorted(self._terms):
            d, n, syms = key
            factors = [str(self._terms[key])]
            if d != 1:
                factors.append(f"sqrt({d})")
            if n:
                factors.append("pi" if n == 1 else f"pi^{n}")
            for name, e in syms:
                factors.append(name if e == 1 else f"{name}^{e}")
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    def __repr__(self):
        return f"ExactScalar({self})"


ONE = ExactScalar.rational(1)
ZERO = ExactScalar()
PI = ExactScalar.pi()


def exact_arith(a: ExactScalar, b: ExactScalar, op: str) -> ExactScalar:
    ops = {
        "add": lambda: a + b,
        "sub": lambda: a - b,
        "mul": lambda: a * b,
        "div": lambda: a / b,
    }
    if op not in ops:
        raise ValueError(f"unknown op {op!r}")
    return ops[op]()


def exact_to_float(a: ExactScalar, bindings: Mapping[str, float] | None = None) -> float:
    return a.to_float(bindings)


def product(items: Iterable[ExactScalar]) -> ExactScalar:
    out = ONE
    for x in items:
        out = out * x
    return out
