import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from rtflab.exactnum import (
    DivisionByZero, ExactScalar, NonExactDivision, UnboundSymbol, exact_arith, exact_to_float, squarefree_split,
)

E = ExactScalar


def test_examples():
    assert E.sqrt(2) * E.sqrt(8) == E.rational(4)
    assert E.rational(Fraction(1, 2)) + Fraction(1, 3) == E.rational(Fraction(5, 6))
    assert (E.pi() * E.sqrt(3)) / E.sqrt(3) == E.pi()
    assert exact_to_float(4 * E.sqrt(1) * E.pi(0)) == 4.0
    assert exact_to_float(E.pi() / 4) == 0.7853981633974483
    assert exact_to_float(2 * E.symbol("S"), {"S": 3.5}) == 7.0


def test_unbound_symbol():
    with pytest.raises(UnboundSymbol):
        exact_to_float(E.symbol("vol"))


def test_division_rules():
    with pytest.raises(DivisionByZero):
        E.rational(1) / E()
    with pytest.raises(NonExactDivision):
        E.rational(1) / (E.rational(1) + E.sqrt(2))
    # a non-monomial divisor is accepted only when the quotient is rational
    a = E.rational(1) + E.sqrt(2)
    assert (3 * a) / a == E.rational(3)
    with pytest.raises(NonExactDivision):
        (a * (E.pi() + 3)) / a


def test_exact_arith_ops():
    a, b = E.sqrt(3), E.pi(2)
    assert exact_arith(a, b, "add") == a + b
    assert exact_arith(a, b, "sub") == a - b
    assert exact_arith(a, b, "mul") == a * b
    assert exact_arith(a * b, b, "div") == a
    with pytest.raises(ValueError):
        exact_arith(a, b, "pow")


@pytest.mark.parametrize("n", [1, 2, 12, 18, 72, 97 * 4, 3 ** 5, 10 ** 4])
def test_squarefree_split_against_sympy(n):
    c, d = squarefree_split(n)
    assert c * c * d == n
    assert all(e == 1 for e in sympy.factorint(d).values())


def test_sqrt_squares_to_radicand():
    for d in range(1, 10 ** 4 + 1):
        if all(e == 1 for e in sympy.factorint(d).values()):
            assert E.sqrt(d) * E.sqrt(d) == E.rational(d)


def _to_sympy(x: ExactScalar):
    out = sympy.Integer(0)
    for (d, n, syms), c in x.terms.items():
        term = sympy.Rational(c.numerator, c.denominator) * sympy.sqrt(d) * sympy.pi ** n
        for name, e in syms:
            term *= sympy.Symbol(name) ** e
        out += term
    return out


rats = st.fractions(min_value=-20, max_value=20, max_denominator=12)
monomials = st.builds(
    lambda c, d, n, s: E.rational(c) * E.sqrt(d) * E.pi(n) * (E.symbol("S", s) if s else 1),
    rats, st.sampled_from([1, 2, 3, 5, 6, 7, 12]), st.integers(-2, 2), st.integers(-1, 2),
)
scalars = st.lists(monomials, min_size=0, max_size=3).map(lambda xs: sum(xs, E()))


@settings(max_examples=150, deadline=None)
@given(scalars, scalars, scalars)
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c


@settings(max_examples=150, deadline=None)
@given(scalars, scalars)
def test_matches_sympy(a, b):
    assert sympy.simplify(_to_sympy(a * b) - _to_sympy(a) * _to_sympy(b)) == 0
    assert sympy.simplify(_to_sympy(a + b) - _to_sympy(a) - _to_sympy(b)) == 0


@settings(max_examples=150, deadline=None)
@given(scalars, scalars)
def test_float_is_multiplicative(a, b):
    env = {"S": 1.7}
    fa, fb, fab = exact_to_float(a, env), exact_to_float(b, env), exact_to_float(a * b, env)
    assert math.isclose(fab, fa * fb, rel_tol=1e-12, abs_tol=1e-12 * (1 + abs(fa) * abs(fb)))


@settings(max_examples=100, deadline=None)
@given(monomials.filter(bool), scalars)
def test_monomial_division_inverts_multiplication(m, a):
    assert (a * m) / m == a
