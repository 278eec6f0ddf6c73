"""Positivity-region algebra: shell matrices, minors, roots, and the
pointwise necessary condition.

Root values are frozen from a bisection run at tol 1e-9 and guard
against regressions; the quartic values at integer arguments are exact
rational arithmetic checked by hand.
"""

import math

import numpy as np
import pytest

from lamelab.errors import BracketFailureError, InvalidParameterError
from lamelab.region import (
    WITNESS_DIRECTION,
    b_minus,
    b_plus,
    critical_roots,
    d2_evaluate,
    d2_minimum,
    minor_polynomials_minus,
    minor_polynomials_plus,
    minors,
    necessary_q,
    positivity_interval,
    region_report,
)

# frozen endpoints (bisection tol 1e-9)
ALPHA_MINUS = -0.19462332391738818
ALPHA_PLUS = 1.5242496495246884
ALPHA_MINUS_CRIT = -0.9015608620643616
ALPHA_PLUS_CRIT = 39.449869547367136


def test_matrix_domains():
    with pytest.raises(InvalidParameterError):
        b_plus(-0.1)
    with pytest.raises(InvalidParameterError):
        b_minus(0.5)
    with pytest.raises(InvalidParameterError):
        b_minus(-1.0)
    b_minus(0.0)            # boundary value belongs to the minus branch


def test_matrices_at_zero():
    np.testing.assert_allclose(b_plus(0.0), np.diag([1.0, 1.0, 0.0]), atol=1e-15)
    np.testing.assert_allclose(b_minus(0.0), np.eye(2), atol=1e-15)


def test_bminus_entry_frozen():
    # 1 - (0.1/3) * 2.8 / 1.9, worked out once by hand
    assert b_minus(-0.1)[0, 0] == pytest.approx(0.9508771929824561, rel=1e-15)


def test_minors_of_known_matrix():
    m = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 2.0]])
    got = minors(m)
    assert got[0] == 4.0
    assert got[1] == pytest.approx(11.0, rel=1e-14)
    assert got[2] == pytest.approx(float(np.linalg.det(m)), rel=1e-12)
    with pytest.raises(InvalidParameterError):
        minors(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidParameterError):
        minors(np.eye(4))


def test_minors_match_closed_forms_plus():
    rng = np.random.default_rng(0)
    alphas = rng.uniform(0.0, 20.0, size=100)
    p1, p2, p3 = minor_polynomials_plus(alphas)
    for a, e1, e2, e3 in zip(alphas, p1, p2, p3):
        m1, m2, m3 = minors(b_plus(float(a)))
        assert m1 == pytest.approx(e1, rel=1e-10)
        assert m2 == pytest.approx(e2, rel=1e-10, abs=1e-12)
        assert m3 == pytest.approx(e3, rel=1e-10, abs=1e-12)


def test_minors_match_closed_forms_minus():
    rng = np.random.default_rng(1)
    alphas = rng.uniform(-0.999, 0.0, size=100)
    p1, p2 = minor_polynomials_minus(alphas)
    for a, e1, e2 in zip(alphas, p1, p2):
        m1, m2 = minors(b_minus(float(a)))
        assert m1 == pytest.approx(e1, rel=1e-10, abs=1e-12)
        assert m2 == pytest.approx(e2, rel=1e-10, abs=1e-12)


def test_sign_change_uniqueness_at_scan_resolution():
    # det B+ crosses once in (1, 2]; det B- once in (-0.5, 0)
    a = np.arange(1.0, 2.0 + 5e-4, 1e-3)
    vals = minor_polynomials_plus(a)[2]
    crossings = np.sum(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    assert crossings == 1
    a = np.arange(-0.5, 0.0, 1e-3)
    vals = minor_polynomials_minus(a)[1]
    crossings = np.sum(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    assert crossings == 1


def test_quartic_exact_values():
    assert necessary_q(0.0) == 16.0
    assert necessary_q(40.0) == -9584.0
    assert necessary_q(-1.0) == -0.25
    assert necessary_q(-0.95) == pytest.approx(-0.1375015625, rel=1e-12)


def test_quartic_witness_reduction():
    # d2 on the witness direction collapses to the quartic q
    rng = np.random.default_rng(4)
    w = np.array(WITNESS_DIRECTION)
    for a in rng.uniform(-0.99, 45.0, size=100):
        assert d2_evaluate(w, float(a)) == pytest.approx(
            necessary_q(float(a)), rel=1e-10, abs=1e-9
        )


def test_d2_constant_at_alpha_zero():
    rng = np.random.default_rng(5)
    w = rng.normal(size=(30, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    np.testing.assert_allclose(d2_evaluate(w, 0.0), 16.0, rtol=1e-14)
    assert d2_minimum(0.0) == pytest.approx(16.0, rel=1e-14)


def test_d2_minimum_bounded_by_witness():
    for a in (-0.95, 5.0, 40.0):
        assert d2_minimum(a) <= necessary_q(a) + 1e-9
    with pytest.raises(InvalidParameterError):
        d2_minimum(1.0, n=8)


def test_roots_frozen():
    lo, hi = positivity_interval(1e-9)
    assert lo == pytest.approx(ALPHA_MINUS, abs=2e-9)
    assert hi == pytest.approx(ALPHA_PLUS, abs=2e-9)
    c_lo, c_hi = critical_roots(1e-9)
    assert c_lo == pytest.approx(ALPHA_MINUS_CRIT, abs=2e-9)
    assert c_hi == pytest.approx(ALPHA_PLUS_CRIT, abs=2e-9)


def test_roots_are_actual_zeros():
    lo, hi = positivity_interval(1e-12)
    assert abs(minor_polynomials_minus(lo)[1]) < 1e-10
    assert abs(minor_polynomials_plus(hi)[2]) < 1e-9
    c_lo, c_hi = critical_roots(1e-12)
    assert abs(necessary_q(c_lo)) < 1e-9
    # q is steep near its upper root (|q'| ~ 1.7e4), so the bisection
    # bracket of width 1e-12 still leaves a residual of order 1e-8
    assert abs(necessary_q(c_hi)) < 5e-8


def test_region_report_structure():
    rep = region_report(1e-9)
    assert rep.ordered()
    assert rep.alpha_minus_bracket[0] <= rep.alpha_minus <= rep.alpha_minus_bracket[1]
    assert rep.alpha_plus_bracket[0] <= rep.alpha_plus <= rep.alpha_plus_bracket[1]
    for (blo, bhi), root in zip(
        rep.critical_brackets,
        (rep.alpha_minus_critical, rep.alpha_plus_critical),
    ):
        assert blo <= root <= bhi
        assert bhi - blo <= 1.1e-9
    assert rep.tol == 1e-9
    assert rep.scan_step == 1e-3


def test_tolerance_validation():
    for fn in (positivity_interval, critical_roots, region_report):
        with pytest.raises(InvalidParameterError):
            fn(0.0)
        with pytest.raises(InvalidParameterError):
            fn(-1e-9)


def test_interval_interior_is_positive_definite():
    # Sylvester on a sample inside the certified interval
    for a in np.linspace(ALPHA_MINUS + 1e-3, -1e-6, 25):
        assert all(m > 0.0 for m in minors(b_minus(float(a))))
    for a in np.linspace(1e-6, ALPHA_PLUS - 1e-3, 25):
        assert all(m > 0.0 for m in minors(b_plus(float(a))))
    # and just outside the det turns negative
    assert minors(b_plus(ALPHA_PLUS + 1e-3))[2] < 0.0
    assert minors(b_minus(ALPHA_MINUS - 1e-3))[1] < 0.0
