import copy
import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import primerange
from sympy.functions.combinatorial.numbers import kronecker_symbol

from rtflab.exactnum import ExactScalar
from rtflab.globalrtf import GlobalSetup, conductor_table
from rtflab.lfunc import (
    CLASS_NUMBERS, CoefficientSeries, L_one_eta, DiscriminantOutOfTable, FixtureIncomplete, FixtureSet, InsufficientCoefficients,
    NewformFixture, NoHeckeCharacter, QuadraticCharacter, UnknownLocalType, adjoint_conductor, adjoint_series,
    afe_central_value, hecke_character_for, is_fundamental, load_fixtures, partial_euler, rankin_selberg_series,
    theorem1_numeric_check,
)

EX1 = dict(N1=77, N2=3, N3=1, k=(2,), disc_E=-4)


def _mp_L(s, d):
    q = abs(d)
    return float(mpmath.dirichlet(s, [int(kronecker_symbol(d, a)) for a in range(q)]))


def _L1_finite_sum(d):
    # odd real primitive character: L(1, chi) = -pi q^{-3/2} sum_{a<q} a chi(a)
    q = -d
    return -math.pi * q ** -1.5 * sum(a * int(kronecker_symbol(d, a)) for a in range(1, q))


def _reduced_forms(d):
    # ax^2 + bxy + cy^2 with |b| <= a <= c, b >= 0 if |b| = a or a = c
    h = 0
    a = 1
    while 3 * a * a <= -d:
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            h += 1
        a += 1
    return h


def test_L1_eta_gaussian():
    exact, series = L_one_eta(QuadraticCharacter(-4))
    assert exact == ExactScalar.pi() / 4
    assert math.isclose(series, math.pi / 4, rel_tol=1e-12)


@pytest.mark.parametrize("d", [-3, -7, -8, -11, -15, -20, -23, -24])
def test_L1_eta_against_mpmath(d):
    exact, series = L_one_eta(QuadraticCharacter(d))
    oracle = _L1_finite_sum(d)
    assert math.isclose(series, oracle, rel_tol=1e-10)
    assert math.isclose(float(exact), oracle, rel_tol=1e-10)


def test_out_of_table_carries_series():
    d = -203
    assert is_fundamental(d) and d not in CLASS_NUMBERS
    with pytest.raises(DiscriminantOutOfTable) as exc:
        L_one_eta(QuadraticCharacter(d))
    assert math.isclose(exc.value.series, _L1_finite_sum(d), rel_tol=1e-10)


def test_class_number_table():
    for d, h in CLASS_NUMBERS.items():
        assert _reduced_forms(d) == h, d


def test_non_fundamental_rejected():
    with pytest.raises(ValueError):
        QuadraticCharacter(-12)


def test_partial_euler_basics():
    eta = QuadraticCharacter(-4)
    assert partial_euler(eta, 1, []) == ExactScalar.rational(1)
    assert partial_euler(eta, 1, [3]) == ExactScalar.rational(Fraction(3, 4))
    assert partial_euler(eta, 1, [5, 3]) == ExactScalar.rational(Fraction(3, 4) * Fraction(5, 4))
    with pytest.raises(ValueError):
        partial_euler(eta, 1, [3], mode="both")


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([-3, -4, -7, -8]), st.sets(st.sampled_from(list(primerange(2, 40))), max_size=5))
def test_partial_euler_splits_full_value(d, S):
    eta = QuadraticCharacter(d)
    over = float(partial_euler(eta, 2, sorted(S)))
    omit = partial_euler(eta, 2, sorted(S), mode="omit_S")
    assert math.isclose(over * omit, _mp_L(2, d), rel_tol=1e-8)


def test_zeta_half():
    zeta = CoefficientSeries([1.0] * 80, 1, gamma_R=(0,), poles=((1, 1), (0, -1)), label="zeta")
    r = afe_central_value(zeta)
    assert math.isclose(r.value, float(mpmath.zeta(0.5)), rel_tol=1e-9)
    assert r.error < 1e-7


@pytest.mark.parametrize("d", [-4, -3, -7, 5, 8])
def test_dirichlet_half(d):
    r = afe_central_value(QuadraticCharacter(d).series(300))
    assert math.isclose(r.value, _mp_L(0.5, d), rel_tol=1e-9)


def test_too_few_coefficients():
    with pytest.raises(InsufficientCoefficients):
        afe_central_value(QuadraticCharacter(-4).series(3))


def test_degree4_product():
    chars = [QuadraticCharacter(d) for d in (-3, -4, -7, 5)]
    cs = chars[0].series(2000)
    for c in chars[1:]:
        cs = cs.product(c.series(2000))
    assert cs.degree == 4
    got = afe_central_value(cs).value
    expected = math.prod(_mp_L(0.5, c.disc) for c in chars)
    assert math.isclose(got, expected, rel_tol=1e-5)


def test_from_euler_reproduces_character():
    eta = QuadraticCharacter(-7)
    cs = CoefficientSeries.from_euler(lambda p: [1, -eta(p)], 500, 7, gamma_R=(1,))
    assert np.allclose(cs.coeffs, eta.series(500).coeffs)


def test_conductors():
    s = GlobalSetup(**EX1, m=(1,))
    assert conductor_table(s)["total"] == 53361 * 16
    assert adjoint_conductor(s) == 53361 == 231 ** 2


def test_fixture_set():
    fs = load_fixtures(level=693, weight=4)
    assert fs.complete and len(fs.forms) == 32 and fs.newspace_dimension == 76
    f = fs.forms[0]
    assert NewformFixture.from_json(f.to_json()).to_json() == f.to_json()
    assert set(f.local_types) == {3, 7, 11}
    # Deligne: |a_p| <= 2 p^{(k-1)/2} at the good primes
    for f in fs.forms:
        for p, a in f.ap.items():
            if p not in (3, 7, 11):
                assert abs(a) <= 2 * p ** 1.5 + 1e-6
    with pytest.raises(FixtureIncomplete):
        load_fixtures(level=693, weight=6)


def test_hecke_character():
    chi = hecke_character_for(GlobalSetup(**EX1, m=(1,)))
    assert chi.trivial_on_units()
    # trivial on ideals generated by rational integers prime to 3
    for n in (2, 5, 7, 11, 13):
        assert abs(chi((n, 0)) - 1) < 1e-12
    with pytest.raises(NoHeckeCharacter):
        hecke_character_for(GlobalSetup(**EX1, m=(0,)))


def test_rankin_selberg_ramanujan_and_types():
    s = GlobalSetup(**EX1, m=(1,))
    fs = load_fixtures(level=693, weight=4)
    f = next(f for f in fs.forms if f.local_types[3] == "depth_zero_supercuspidal")
    cs = rankin_selberg_series(f, s, cutoff=300)
    assert cs.ramanujan <= 1 + 1e-6
    assert cs.degree == 4 and cs.conductor == 853776
    ad = adjoint_series(f, s, cutoff=300)
    assert ad.degree == 3
    bad = copy.deepcopy(f)
    del bad.local_types[7]
    with pytest.raises(UnknownLocalType):
        rankin_selberg_series(bad, s, cutoff=300)
    with pytest.raises(InsufficientCoefficients):
        rankin_selberg_series(f, s, cutoff=2 * f.prime_bound())


def test_adjoint_local_factor_symmetric_in_satake():
    # the good-prime factor only sees lambda = alpha + 1/alpha, so alpha and 1/alpha give the same series
    s = GlobalSetup(**EX1, m=(1,))
    f = load_fixtures(level=693, weight=4).forms[0]
    g = copy.deepcopy(f)
    p = 13
    lam = f.ap[p] / p ** 1.5
    alpha = complex(lam / 2, math.sqrt(max(0.0, 1 - lam * lam / 4)))
    g.ap[p] = ((1 / alpha) + alpha).real * p ** 1.5
    assert np.allclose(adjoint_series(f, s, cutoff=300).coeffs, adjoint_series(g, s, cutoff=300).coeffs)
    ad = adjoint_series(f, s, cutoff=300)
    a1, a2 = alpha, 1 / alpha
    expected = np.poly([a1 * a1, 1, a2 * a2])
    assert np.allclose(ad.euler[p], expected)


def test_degenerate_when_no_form_is_eligible():
    fs = load_fixtures(level=693, weight=4)
    forms = [copy.deepcopy(f) for f in fs.forms]
    for f in forms:
        f.local_types[3] = "steinberg"
    empty = FixtureSet(693, 4, forms, fs.newspace_dimension, fs.excluded)
    r = theorem1_numeric_check(GlobalSetup(**EX1, m=(1,)), empty)
    assert r["verdict"] == "degenerate" and r["lhs_completed"] == 0.0


def test_incomplete_fixture_rejected():
    fs = load_fixtures(level=693, weight=4)
    short = FixtureSet(693, 4, fs.forms[:-1], fs.newspace_dimension, fs.excluded)
    with pytest.raises(FixtureIncomplete):
        theorem1_numeric_check(GlobalSetup(**EX1, m=(1,)), short)


def test_numeric_identity_m1_and_perturbation():
    s = GlobalSetup(**EX1, m=(1,))
    r = theorem1_numeric_check(s)
    assert r["verdict"] == "agree"
    assert math.isclose(r["lhs_completed"], 115.5, rel_tol=1e-6)
    # finite L(1, eta) puts a factor L_inf(1, eta)^{-1} = pi on the right
    assert math.isclose(r["ratio_rhs_finite_eta_to_lhs"], math.pi, rel_tol=1e-6)
    fs = copy.deepcopy(load_fixtures(level=693, weight=4))
    f = next(f for f in fs.forms if f.local_types[3] == "depth_zero_supercuspidal")
    f.ap[5] = -f.ap[5] + 3.0
    bad = theorem1_numeric_check(s, fs)
    assert bad["verdict"] == "disagree" and bad["deviation_completed"] > 0.01


def test_rankin_selberg_good_factors_are_unitary():
    # roots of each good local polynomial are closed under r -> 1 / conj(r), all on the unit circle
    s = GlobalSetup(**EX1, m=(1,))
    fs = load_fixtures(level=693, weight=4)
    for f in [f for f in fs.forms if f.local_types[3] == "depth_zero_supercuspidal"][:4]:
        cs = rankin_selberg_series(f, s, cutoff=400)
        for p, P in cs.euler.items():
            if p in (3, 7, 11) or len(P) < 3:
                continue
            roots = np.roots(P[::-1])  # P(X) = prod (1 - r X): roots of the reversed polynomial are the r
            assert np.allclose(np.abs(roots), 1, atol=1e-8), p
            inv = 1 / np.conj(roots)
            assert all(np.min(np.abs(roots - z)) < 1e-8 for z in inv)


def _serve(payload):
    import threading
    from http.server import BaseHTTPRequestHandler, HTTPServer

    hits = []

    class H(BaseHTTPRequestHandler):
        def do_GET(self):
            hits.append(self.path)
            body = json.dumps(payload).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *a):
            pass

    srv = HTTPServer(("127.0.0.1", 0), H)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    return srv, hits


def test_fetch_fixtures_caches(tmp_path, monkeypatch):
    from importlib import resources

    from rtflab.lfunc import DB_URL_ENV, fetch_fixtures

    payload = json.loads((resources.files("rtflab") / "data" / "newforms_693_4.json").read_text())
    srv, hits = _serve(payload)
    try:
        monkeypatch.setenv(DB_URL_ENV, f"http://127.0.0.1:{srv.server_port}")
        fs = fetch_fixtures(693, 4, cache_dir=tmp_path)
        assert fs.complete and len(fs.forms) == 32
        assert hits == ["/newforms?level=693&weight=4"]
        assert (tmp_path / "newforms_693_4.json").exists()
        fetch_fixtures(693, 4, cache_dir=tmp_path)
        assert len(hits) == 1
        with pytest.raises(FixtureIncomplete):
            fetch_fixtures(693, 6, cache_dir=tmp_path)
    finally:
        srv.shutdown()
    monkeypatch.delenv(DB_URL_ENV)
    with pytest.raises(FixtureIncomplete):
        fetch_fixtures(77, 2, cache_dir=tmp_path)
