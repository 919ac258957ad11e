import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st
from sympy import factorint, jacobi_symbol

from rtflab.acceptance import identity_setups, sweep_setups
from rtflab.exactnum import ExactScalar
from rtflab.globalrtf import (
    L_SYMBOL, CriteriaNotMet, GlobalSetup, ParityViolation, SetupError, SplittingMismatch, TOutOfRange,
    classify_places, conductor_table, default_a, emptiness_criteria, enumerate_regular_support,
    global_singular, global_singular_from_local, membership_report, regular_bound_total, spectral_prefactor,
    subconvexity_report, theorem_rhs, verify_identity,
)

EX1 = dict(N1=77, N2=3, N3=1, k=(2,), m=(0,), disc_E=-4)


def test_splitting_mismatch():
    with pytest.raises(SplittingMismatch):
        classify_places(GlobalSetup(5, 3, 1, (2,), (0,), disc_E=-4))


def test_parity():
    with pytest.raises(ParityViolation):
        classify_places(GlobalSetup(1, 3 * 7, 1, (2,), (0,), disc_E=-4))


def test_prefactor_ex1():
    s = GlobalSetup(**EX1)
    # 4 L_{S'}^2 * 2 / (2 sqrt(c(Omega) d) N1) with L_{S'} = 1, c = 9, d = 4
    assert spectral_prefactor(s) == ExactScalar.rational(Fraction(4 * 2, 2 * 6 * 77))


def test_rhs_ex1():
    s = GlobalSetup(**EX1)
    assert theorem_rhs(s) == 462 * ExactScalar.symbol(L_SYMBOL)
    # with L(1, eta_{-4}) = pi/4 the right side is 115.5 pi
    val = theorem_rhs(s).subs({L_SYMBOL: ExactScalar.pi() / 4})
    assert val == ExactScalar.rational(Fraction(231, 2)) * ExactScalar.pi()
    assert math.isclose(val.to_float(), 362.85, rel_tol=1e-4)


def test_verify_ex1_and_mutations():
    s = GlobalSetup(**EX1)
    rep = verify_identity(s)
    assert rep.verdict == "equal" and rep.residual == []
    bad = verify_identity(s, mutation="rhs_power_of_2")
    assert bad.verdict == "unequal" and bad.residual
    with pytest.raises(ValueError):
        verify_identity(s, mutation="nope")


def test_verify_sigma3_instance():
    s = GlobalSetup(1, 5, 3, (2,), (0,), disc_E=-3)
    assert any(p.cls == "sigma3" for p in classify_places(s))
    assert verify_identity(s).verdict == "equal"


def test_criteria_examples():
    assert emptiness_criteria(GlobalSetup(**EX1)) == (True, True)
    small = GlobalSetup(1, 3, 1, (2,), (0,), disc_E=-4)
    assert emptiness_criteria(small) == (False, False)
    with pytest.raises(CriteriaNotMet):
        verify_identity(small)


def test_enumeration_small_case():
    s = GlobalSetup(1, 3, 1, (2,), (0,), disc_E=-4)
    a = default_a(s)
    pts = enumerate_regular_support(s)
    # oracle: brute-force y in 3Z with |y| < a*c, xi = y/a must be a local norm at every place
    oracle = []
    for y in range(-a * 9 + 1, a * 9):
        if y % 3 or y == 0:
            continue
        xi = Fraction(y, a)
        if xi in (0, 1):
            continue
        if membership_report(s, xi)["all"]:
            oracle.append(xi)
    assert sorted(p.xi for p in pts) == sorted(oracle)
    assert len(pts) < 36


def test_enumeration_empty_under_criteria():
    assert enumerate_regular_support(GlobalSetup(**EX1)) == []
    for s in sweep_setups(50):
        if any(emptiness_criteria(s)):
            assert enumerate_regular_support(s) == []


def test_bound_without_ramified_places():
    s = GlobalSetup(1, 3, 1, (2,), (0,), disc_E=-4)
    b = regular_bound_total(s).to_json()
    assert math.isclose(b["total"], sum(t["value"] for t in b["terms"]))


def test_singular_is_product_of_locals():
    for s in identity_setups():
        if s.degree != 1:
            continue
        total, parts = global_singular_from_local(s)
        # ramified Sigma3 places carry vol(F^x\E^x) = 2 vol(U\U_E), absent from the closed form
        n3 = sum(1 for p in classify_places(s) if p.cls == "sigma3")
        assert total == global_singular(s) * 2 ** n3
        prod = ExactScalar.rational(1)
        for v in parts.values():
            prod = prod * _parse(v)
        assert prod == total


def _parse(text):
    # local values print as "c" or "c*sqrt(d)"
    if "*sqrt(" in text:
        c, d = text.split("*sqrt(")
        return ExactScalar.rational(Fraction(c)) * ExactScalar.sqrt(int(d.rstrip(")")))
    if text.startswith("sqrt("):
        return ExactScalar.sqrt(int(text[5:-1]))
    return ExactScalar.rational(Fraction(text))


def test_conductor_table():
    s = GlobalSetup(**EX1)
    t = conductor_table(s)
    assert t["local"] == {3: 9}
    assert t["total"] == (77 * 3) ** 2 * 16
    s3 = GlobalSetup(1, 5, 3, (2,), (0,), disc_E=-3)
    assert conductor_table(s3)["local"][3] == 3 ** 5
    assert conductor_table(s3)["local"][5] == 5 ** 2


def test_identity_setups_are_equal():
    setups = identity_setups()
    assert len(setups) >= 20
    assert any(s.degree == 2 for s in setups)
    assert any(any(p.cls == "sigma3" for p in classify_places(s)) for s in setups if s.degree == 1)
    for s in setups:
        assert verify_identity(s).verdict == "equal"


def _inert(p, d):
    return p != 2 and jacobi_symbol(d % p, p) == -1


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(st.sampled_from([-3, -4, -7, -8, -11]), st.lists(st.sampled_from([3, 5, 7, 11, 13, 17, 19, 23, 29, 31]),
                                                      min_size=1, max_size=4, unique=True), st.integers(0, 15),
       st.sampled_from([(2, 0), (3, 1), (4, 2), (5, 0)]))
def test_random_setups_equal(d, primes, mask, km):
    inert = [p for p in primes if _inert(p, d)]
    assume(len(inert) >= 1)
    n2 = inert[0]
    n1 = math.prod(p for i, p in enumerate(inert[1:]) if mask >> i & 1)
    try:
        s = GlobalSetup(n1, n2 * 31 if (1 + len(factorint(n1)) + 1) % 2 and _inert(31, d) else n2, 1,
                        (km[0],), (km[1],), disc_E=d)
        classify_places(s)
    except SetupError:
        assume(False)
    assume(any(emptiness_criteria(s)))
    assert verify_identity(s).verdict == "equal"
    for mut in ("rhs_power_of_2", "N1", "binomial"):
        assert verify_identity(s, mutation=mut).verdict == "unequal"


def test_subconvexity():
    r = subconvexity_report(Fraction(1, 6) - Fraction(1, 1000), Fraction(1, 1000))
    assert r["best_case"] == "1/2 - 1/6 + eps"
    assert r["best_case_main"] == "1/3"
    with pytest.raises(TOutOfRange):
        subconvexity_report(Fraction(1, 6), Fraction(1, 100))
    r0 = subconvexity_report(0, Fraction(1, 100))
    lo, hi = (Fraction(x) for x in r0["window"])
    assert lo < hi


def test_subconvexity_slope_numeric():
    # direct float evaluation of max(a(1+e)+e, ea+1/2+e)/(1+a) on a = 1/2 - e
    def E(e):
        a = 0.5 - e
        return max(a * (1 + e) + e, e * a + 0.5 + e) / (1 + a)

    for e in (1e-4, 1e-5):
        assert math.isclose((E(e) - 1 / 3) / e, 11 / 9, rel_tol=1e-3)
    assert subconvexity_report(0, Fraction(1, 100))["best_case_eps_slope"] == "11/9"


def test_json_roundtrip():
    s = GlobalSetup(**EX1, omega_n={13: 1})
    assert GlobalSetup.from_json(s.to_json()).to_json() == s.to_json()
