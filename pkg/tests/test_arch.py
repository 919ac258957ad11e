import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from scipy.special import beta as beta_fn

from rtflab.arch import (
    ArchPlace, SU2Rep, arch_local_factor_identity, arch_orbital_abs_bound, arch_orbital_closed,
    arch_orbital_numeric, arch_spectral_closed, arch_spectral_numeric, beta_binomial_identity, beta_exact,
    matrix_coefficient, quaternion_matrix,
)
from rtflab.exactnum import ExactScalar


def _su2(t1, t2, t3):
    a = math.cos(t1) * cmath.exp(1j * t2)
    b = math.sin(t1) * cmath.exp(1j * t3)
    return a, b


angles = st.floats(0, 2 * math.pi, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), angles, angles, angles)
def test_unitary(k, t1, t2, t3):
    rep = SU2Rep(k)
    M = rep.matrix(quaternion_matrix(*_su2(t1, t2, t3)))
    assert np.allclose(M @ M.conj().T, np.eye(rep.dim), atol=1e-12)


def _sym_power_sympy(g, n):
    # independent construction: act on x^j y^(n-j) by substitution, orthonormalize
    x, y = sympy.symbols("x y")
    (a, b), (c, d) = g
    out = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n + 1):
        poly = sympy.Poly(sympy.expand((a * x + c * y) ** j * (b * x + d * y) ** (n - j)), x, y)
        for i in range(n + 1):
            coeff = complex(poly.coeff_monomial(x ** i * y ** (n - i)))
            out[i, j] = coeff * math.sqrt(math.comb(n, j)) / math.sqrt(math.comb(n, i))
    return out


@pytest.mark.parametrize("k", [2, 3, 4])
def test_rep_matches_sympy(k):
    g = quaternion_matrix(*_su2(0.3, 1.1, -0.4))
    assert np.allclose(SU2Rep(k).matrix(g), _sym_power_sympy(g, 2 * k - 2), atol=1e-12)


def test_coefficient_examples():
    for k in (1, 2, 3):
        for m in range(-k + 1, k):
            assert abs(matrix_coefficient(SU2Rep(k), m, (1, 0)) - 1) < 1e-14
    for t in (0.2, 1.0, 2.5):
        assert abs(matrix_coefficient(SU2Rep(1), 0, _su2(t, 0.4, 1.3)) - 1) < 1e-14
    # weight-0 vector of Sym^2 under a rotation by t: the (1,1) entry of the explicit 3x3 matrix
    for t in (0.2, 1.0, 2.5):
        g = (math.cos(t), math.sin(t))
        assert abs(matrix_coefficient(SU2Rep(2), 0, g) - math.cos(2 * t)) < 1e-12
        z = cmath.exp(1j * t)
        assert abs(matrix_coefficient(SU2Rep(2), 0, (z, 0)) - 1) < 1e-12
        assert abs(matrix_coefficient(SU2Rep(2), 1, (z, 0)) - z ** 2) < 1e-12


@pytest.mark.parametrize("k,m,val", [(1, 0, 1), (2, 0, 3), (3, 1, 5)])
def test_schur_examples(k, m, val):
    expected = 4 * math.pi ** 2 / val
    assert math.isclose(arch_spectral_numeric(ArchPlace(k, m)), expected, rel_tol=1e-6)
    assert arch_spectral_closed(ArchPlace(k, m)) == 4 * ExactScalar.pi(2) * Fraction(1, 2 * k - 1) * ExactScalar.pi(-1) * (
        1 / (2 * beta_exact(k + m, k - m)))


def test_spectral_closed_equals_schur_times_beta():
    # scipy's beta function as the oracle
    for k in range(1, 6):
        for m in range(-k + 1, k):
            v = arch_spectral_closed(ArchPlace(k, m)).to_float()
            assert math.isclose(v, 4 * math.pi ** 2 / (2 * k - 1) / (2 * math.pi * beta_fn(k + abs(m), k - abs(m))))


def test_beta_identity():
    for k in range(1, 13):
        for m in range(-k + 1, k):
            assert beta_binomial_identity(k, m) == 1
            assert math.isclose(float(beta_exact(k + m, k - m)), beta_fn(k + m, k - m), rel_tol=1e-12)


def test_orbital_examples():
    assert arch_orbital_closed(ArchPlace(1, 0), Fraction(-3, 7)) == ExactScalar.rational(4)
    assert arch_orbital_closed(ArchPlace(2, 1), -1) == ExactScalar.rational(2)
    # m = 0, k = 2: 4 P_1((1+xi)/(1-xi)) vanishes at xi = -1 (quadrature agrees)
    assert arch_orbital_closed(ArchPlace(2, 0), -1) == ExactScalar.rational(0)
    assert abs(arch_orbital_numeric(ArchPlace(2, 0), -1)) < 1e-8


def test_orbital_rejects_positive_xi():
    with pytest.raises(ValueError):
        arch_orbital_closed(ArchPlace(2, 0), Fraction(1, 2))


@pytest.mark.parametrize("k", range(1, 7))
def test_orbital_m0_is_legendre(k):
    for xi in (Fraction(-1, 10), Fraction(-1), Fraction(-10), Fraction(-7, 3)):
        x = float((1 + xi) / (1 - xi))
        leg = np.polynomial.legendre.legval(x, [0] * (k - 1) + [1])
        assert math.isclose(arch_orbital_closed(ArchPlace(k, 0), xi).to_float(), 4 * leg, abs_tol=1e-12)


@pytest.mark.parametrize("k,m,xi", [(1, 0, -0.5), (3, 0, -2), (4, 2, -0.1), (5, -3, -10)])
def test_orbital_quadrature(k, m, xi):
    closed = arch_orbital_closed(ArchPlace(k, m), Fraction(xi)).to_float()
    assert math.isclose(arch_orbital_numeric(ArchPlace(k, m), Fraction(xi)), closed, rel_tol=1e-6, abs_tol=1e-9)


def test_m_symmetry():
    for k in range(1, 6):
        for m in range(1, k):
            assert arch_spectral_closed(ArchPlace(k, m)) == arch_spectral_closed(ArchPlace(k, -m))
            for xi in (Fraction(-1, 10), Fraction(-1), Fraction(-10)):
                assert arch_orbital_closed(ArchPlace(k, m), xi) == arch_orbital_closed(ArchPlace(k, -m), xi)
    assert math.isclose(arch_spectral_numeric(ArchPlace(3, 2)), arch_spectral_numeric(ArchPlace(3, -2)), rel_tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 7), st.fractions(max_value=Fraction(-1, 50), min_value=-50, max_denominator=60))
def test_abs_bound_dominates(k, m, xi):
    m = m % k
    assert abs(arch_orbital_closed(ArchPlace(k, m), xi).to_float()) <= arch_orbital_abs_bound(ArchPlace(k, m), xi).to_float() + 1e-12


def test_local_factor_identity():
    for k in range(1, 8):
        for m in range(-k + 1, k):
            lhs, rhs = arch_local_factor_identity(ArchPlace(k, m))
            assert lhs == rhs


def test_place_validation():
    with pytest.raises(ValueError):
        ArchPlace(2, 2)
    with pytest.raises(ValueError):
        ArchPlace(0, 0)
