"""Exact elements of cyclotomic fields Q(zeta_N).

Character values are roots of unity; sums of them (orbital integrals, Gauss
sums) are kept exact here and only turned into floats for reports.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from sympy import Poly, cyclotomic_poly, symbols

from .exactnum import ExactScalar

__all__ = ["Cyclo", "root_of_unity", "cyclotomic_coeffs"]

_X = symbols("x")


@lru_cache(maxsize=None)
def cyclotomic_coeffs(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, lowest degree first."""
    return tuple(int(c) for c in reversed(Poly(cyclotomic_poly(n, _X), _X).all_coeffs()))


def _reduce(coeffs: list[Fraction], n: int) -> tuple[Fraction, ...]:
    phi = cyclotomic_coeffs(n)
    d = len(phi) - 1
    c = list(coeffs)
    # Phi_n is monic: eliminate top degrees
    for k in range(len(c) - 1, d - 1, -1):
        lead = c[k]
        if lead:
            for i in range(d + 1):
                c[k - d + i] -= lead * phi[i]
    c = c[:d] + [Fraction(0)] * max(0, d - len(c))
    return tuple(c)


class Cyclo:
    """sum_i c_i zeta_N^i reduced modulo Phi_N (so the form is canonical for fixed N)."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Iterable = ()):
        self.n = n
        self.coeffs = _reduce([Fraction(x) for x in coeffs], n)

    @classmethod
    def from_exponents(cls, n: int, exps: dict[int, Fraction | int]) -> "Cyclo":
        c = [Fraction(0)] * n
        for e, w in exps.items():
            c[e % n] += Fraction(w)
        return cls(n, c)

    @classmethod
    def rational(cls, x) -> "Cyclo":
        return cls(1, [Fraction(x)])

    def lift(self, m: int) -> "Cyclo":
        if m % self.n:
            raise ValueError(f"cannot lift Q(zeta_{self.n}) to Q(zeta_{m})")
        step = m // self.n
        c = [Fraction(0)] * m
        for i, a in enumerate(self.coeffs):
            c[i * step] += a
        return Cyclo(m, c)

    def _common(self, other: "Cyclo"):
        m = self.n * other.n // math.gcd(self.n, other.n)
        return self.lift(m), other.lift(m), m

    @staticmethod
    def _coerce(x) -> "Cyclo":
        if isinstance(x, Cyclo):
            return x
        return Cyclo.rational(x)

    def __add__(self, other):
        a, b, m = self._common(self._coerce(other))
        return Cyclo(m, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return Cyclo(self.n, [-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        a, b, m = self._common(self._coerce(other))
        prod = [Fraction(0)] * max(1, 2 * len(a.coeffs) - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] += x * y
        return Cyclo(m, prod)

    __rmul__ = __mul__

    def conj(self) -> "Cyclo":
        c = [Fraction(0)] * self.n
        for i, a in enumerate(self.coeffs):
            c[(-i) % self.n] += a
        return Cyclo(self.n, c)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Cyclo.rational(other)
        if not isinstance(other, Cyclo):
            return NotImplemented
        a, b, _ = self._common(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        z = self.to_complex()
        return hash((round(z.real, 9), round(z.imag, 9)))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def to_complex(self) -> complex:
        parts_re, parts_im = [], []
        for i, a in enumerate(self.coeffs):
            if a:
                z = cmath.exp(2j * math.pi * i / self.n)
                parts_re.append(float(a) * z.real)
                parts_im.append(float(a) * z.imag)
        return complex(math.fsum(parts_re), math.fsum(parts_im))

    def abs2(self) -> "Cyclo":
        return self * self.conj()

    def to_exact_real(self) -> ExactScalar:
        """Convert to ExactScalar when the value is rational (otherwise raise)."""
        return ExactScalar.rational(self.as_fraction())

    def __str__(self):
        terms = [
            (f"{a}" if i == 0 else f"{a}*z{self.n}^{i}")
            for i, a in enumerate(self.coeffs)
            if a
        ]
        return " + ".join(terms) if terms else "0"

    def __repr__(self):
        return f"Cyclo({self})"


def root_of_unity(frac: Fraction) -> Cyclo:
    """e(frac) = exp(2 pi i frac) as an exact cyclotomic number."""
    frac = Fraction(frac) % 1
    return Cyclo.from_exponents(frac.denominator, {frac.numerator: 1})
