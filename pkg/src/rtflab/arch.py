"""Archimedean places: representations of the unit quaternions modulo the
center, matrix coefficients, the spectral integral and the regular orbital
integral, each with a quadrature check."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exactnum import ExactScalar

__all__ = [
    "QuadratureNotConverged",
    "ArchPlace",
    "SU2Rep",
    "matrix_coefficient",
    "arch_spectral_numeric",
    "arch_spectral_closed",
    "arch_orbital_closed",
    "arch_orbital_numeric",
    "arch_orbital_abs_bound",
    "beta_exact",
    "beta_binomial_identity",
    "arch_local_factor_identity",
    "VOL_G_ARCH",
    "VOL_FE_ARCH",
]

VOL_G_ARCH = 4 * math.pi ** 2  # vol(D_v^x / Z_v)
VOL_FE_ARCH = 2  # vol(R^x \ C^x)


class QuadratureNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class ArchPlace:
    k: int
    m: int

    def __post_init__(self):
        if self.k < 1 or abs(self.m) >= self.k:
            raise ValueError(f"need k >= 1 and |m| < k, got k={self.k}, m={self.m}")


class SU2Rep:
    """Sym^{2k-2} of the standard representation, in the orthonormal monomial basis.

    Basis vector j (0 <= j <= n = 2k-2) is sqrt(C(n, j)) x^j y^{n-j}; the
    diagonal torus diag(z, conj z) acts on it by z^{2j-n}, so the weight-2m
    vector is j = k - 1 + m.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.n = 2 * k - 2
        self.dim = 2 * k - 1
        self._norms = np.array([math.sqrt(math.comb(self.n, j)) for j in range(self.n + 1)])

    def index_of_weight(self, m: int) -> int:
        if abs(m) >= self.k:
            raise ValueError("weight out of range")
        return self.k - 1 + m

    def matrix(self, g: np.ndarray) -> np.ndarray:
        """Action P(x, y) -> P((x, y) g) on homogeneous polynomials of degree n."""
        (a, b), (c, d) = g
        n = self.n
        out = np.zeros((n + 1, n + 1), dtype=complex)
        for j in range(n + 1):
            # (a x + c y)^j (b x + d y)^(n-j), coefficients indexed by the power of x
            p1 = _binom_poly(a, c, j)
            p2 = _binom_poly(b, d, n - j)
            out[:, j] = np.convolve(p1, p2)
        # change to the orthonormal basis
        return (out * self._norms[None, :]) / self._norms[:, None]


def _binom_poly(u: complex, w: complex, e: int) -> np.ndarray:
    """Coefficients of (u x + w y)^e by power of x (index i <-> x^i y^(e-i))."""
    return np.array([math.comb(e, i) * u ** i * w ** (e - i) for i in range(e + 1)], dtype=complex)


def quaternion_matrix(alpha: complex, beta: complex, eps: float = -1.0) -> np.ndarray:
    """(alpha, beta) -> [[alpha, eps beta], [conj beta, conj alpha]]."""
    return np.array([[alpha, eps * beta], [np.conj(beta), np.conj(alpha)]], dtype=complex)


def matrix_coefficient(rep: SU2Rep, m: int, g) -> complex:
    """<pi(g) u, u> for the unit weight-2m vector u; g = (alpha, beta) with |alpha|^2 + |beta|^2 = 1."""
    alpha, beta = g
    j = rep.index_of_weight(m)
    return complex(rep.matrix(quaternion_matrix(alpha, beta))[j, j])


# ---------------------------------------------------------------------------
# Spectral integral
# ---------------------------------------------------------------------------


def _euler_element(phi: float, theta: float, psi: float) -> tuple[complex, complex]:
    """diag(e^{i phi/2}) * rotation(theta/2) * diag(e^{i psi/2}) as (alpha, beta)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    alpha = c * complex(math.cos((phi + psi) / 2), math.sin((phi + psi) / 2))
    beta = -s * complex(math.cos((phi - psi) / 2), math.sin((phi - psi) / 2))
    return alpha, beta


def _spectral_at(place: ArchPlace, steps: int) -> float:
    rep = SU2Rep(place.k)
    xs, ws = np.polynomial.legendre.leggauss(steps)
    n_ang = 2 * place.k + 2  # trapezoid in the two torus angles is exact for these trigonometric polynomials
    angles = [2 * math.pi * i / n_ang for i in range(n_ang)]
    total = 0.0
    for x, w in zip(xs, ws):
        theta = math.acos(x)
        acc = 0.0
        for phi in angles:
            for psi in angles:
                c = matrix_coefficient(rep, place.m, _euler_element(phi, theta, psi))
                acc += abs(c) ** 2
        total += w * acc / n_ang ** 2
    # Haar probability measure: (1/2) sin(theta) dtheta x uniform torus angles
    return VOL_G_ARCH * total / 2


def _refine(fn, steps: int, tol: float) -> float:
    a = fn(steps)
    b = fn(2 * steps)
    if abs(a - b) > tol * max(1.0, abs(b)):
        raise QuadratureNotConverged(f"levels {steps} and {2 * steps} differ: {a} vs {b}")
    return b


def arch_spectral_numeric(place: ArchPlace, quad_steps: int = 64, tol: float = 1e-8) -> float:
    """Quadrature of int_{G'} |<pi(g) u, u>|^2 dg (Schur predicts 4 pi^2 / (2k - 1))."""
    if quad_steps < 64:
        raise ValueError("quad_steps must be at least 64")
    return _refine(lambda s: _spectral_at(place, s), quad_steps, tol)


def beta_exact(a: int, b: int) -> Fraction:
    """B(a, b) = (a-1)! (b-1)! / (a+b-1)! for positive integers."""
    return Fraction(math.factorial(a - 1) * math.factorial(b - 1), math.factorial(a + b - 1))


def beta_binomial_identity(k: int, m: int) -> Fraction:
    """(2k-1) B(k+m, k-m) C(2k-2, k+m-1), which equals 1."""
    return (2 * k - 1) * beta_exact(k + m, k - m) * math.comb(2 * k - 2, k + m - 1)


def arch_spectral_closed(place: ArchPlace) -> ExactScalar:
    """vol(G')/(2k-1) * 1/(2 pi B(k+|m|, k-|m|)) (the L-value ratio left out)."""
    k, m = place.k, abs(place.m)
    return 4 * ExactScalar.pi(2) * Fraction(1, 2 * k - 1) * ExactScalar.pi(-1) * (1 / (2 * beta_exact(k + m, k - m)))


def arch_local_factor_identity(place: ArchPlace) -> tuple[ExactScalar, ExactScalar]:
    """Both sides of I_v = L(2,1_v) vol(G')/pi * C(2k-2, k+m-1) at a real place.

    Left: vol(G')/(2k-1) / (2 pi B) * L(1, eta_v) * 2 L(0, eta_v) with the real
    Gamma factors L(s, sgn) = pi^{-(s+1)/2} Gamma((s+1)/2), so L(1, eta) = 1/pi,
    L(0, eta) = 1, and L(2, 1_v) = pi^{-1} Gamma(1) = 1/pi.
    """
    k, m = place.k, place.m
    L1eta = ExactScalar.pi(-1)
    L0eta = ExactScalar.rational(1)
    L2 = ExactScalar.pi(-1)
    volG = 4 * ExactScalar.pi(2)
    lhs = arch_spectral_closed(place) * L1eta * 2 * L0eta
    rhs = L2 * volG * ExactScalar.pi(-1) * math.comb(2 * k - 2, k + m - 1)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Regular orbital integral
# ---------------------------------------------------------------------------


def arch_orbital_closed(place: ArchPlace, xi) -> ExactScalar:
    """vol^2 / (1-xi)^{k-1} * sum_i C(k-m-1, i) C(k+m-1, i) xi^i, vol = 2.

    For m = 0 this is 4 P_{k-1}((1+xi)/(1-xi)) with P the Legendre polynomial,
    which is what the diagonal matrix coefficient at [[1, -x], [conj x, 1]]
    reduces to. The terms alternate in sign because xi < 0.
    """
    xi = Fraction(xi)
    if xi >= 0:
        raise ValueError("xi must be negative at a real place")
    k, m = place.k, place.m
    s = sum(
        (math.comb(k - m - 1, i) * math.comb(k + m - 1, i) * xi ** i for i in range(k - abs(m))),
        Fraction(0),
    )
    return ExactScalar.rational(VOL_FE_ARCH ** 2 * s / (1 - xi) ** (k - 1))


def arch_orbital_abs_bound(place: ArchPlace, xi) -> ExactScalar:
    """Termwise absolute bound: the same sum with every term made positive."""
    xi = Fraction(xi)
    k, m = place.k, place.m
    s = sum(
        (math.comb(k - m - 1, i) * math.comb(k + m - 1, i) * abs(xi) ** i for i in range(k - abs(m))),
        Fraction(0),
    )
    return ExactScalar.rational(VOL_FE_ARCH ** 2 * s / (1 - xi) ** (k - 1))


def _orbital_at(place: ArchPlace, xi: float, steps: int) -> float:
    """int int f'(t1 gamma t2) Omega(t1 t2) dt1 dt2 over (R^x \\ C^x)^2 with Gauss-Legendre nodes."""
    rep = SU2Rep(place.k)
    j = rep.index_of_weight(place.m)
    x = math.sqrt(-xi)  # xi = eps x conj(x), eps = -1
    nrd = 1 - xi
    nodes, weights = np.polynomial.legendre.leggauss(steps)
    # t = e^{i phi}, phi in [0, pi): R^x \ C^x has volume 2, so dt = (2 / pi) dphi
    phis = (nodes + 1) * math.pi / 2
    wts = weights * math.pi / 2 * (2 / math.pi)
    total = 0j
    for p1, w1 in zip(phis, wts):
        t1 = complex(math.cos(p1), math.sin(p1))
        for p2, w2 in zip(phis, wts):
            t2 = complex(math.cos(p2), math.sin(p2))
            alpha = t1 * t2 / math.sqrt(nrd)
            beta = t1 * x * t2.conjugate() / math.sqrt(nrd)
            M = rep.matrix(quaternion_matrix(alpha, beta))
            fval = np.conj(M[j, j])
            omega = (t1 * t2 / (t1 * t2).conjugate()) ** place.m
            total += w1 * w2 * fval * omega
    if abs(total.imag) > 1e-9:
        raise QuadratureNotConverged(f"imaginary part {total.imag} does not vanish")
    return total.real


def arch_orbital_numeric(place: ArchPlace, xi, quad_steps: int = 16, tol: float = 1e-8) -> float:
    return _refine(lambda s: _orbital_at(place, float(xi), s), quad_steps, tol)
