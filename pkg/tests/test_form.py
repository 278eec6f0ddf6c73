"""The weighted identity: closed-form oracles on radial fields, algebraic
structure of the form, and the coercivity comparison.

The radial-field oracle goes through an independent 1d quadrature
(scipy), so agreement is evidence about the 3d polar sweep and the
alpha assembly, not a tautology.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from lamelab.elastic import ElasticParameter
from lamelab.errors import InvalidParameterError, NonCompactSupportError
from lamelab.fields import (
    PlateauProfile,
    RadialField,
    ScaledField,
    ShiftedField,
    random_field_spec,
)
from lamelab.form import (
    bstar_form,
    coercivity_check,
    counterexample_search,
    gradient_weight_integral,
    identity_residual,
    identity_suite,
    lhs_form,
    reduce_field,
)
from lamelab.quadrature import build_polar_grid, default_polar_grid
from lamelab.region import b_minus, b_plus

from conftest import SumField

GRID = default_polar_grid()
PROFILE = PlateauProfile(1.5, 4.0)
AMP = np.array([0.7, -0.3, 1.1])

# int p'(r)^2 r dr for PROFILE, via adaptive 1d quadrature


def _profile_energy():
    def dp(r):
        return PROFILE(np.atleast_1d(r))[1][0]

    val, err = quad(lambda r: dp(r) ** 2 * r, 0.0, 4.0, limit=200)
    assert err < 1e-8
    return val


RADIAL_I = _profile_energy()


@pytest.mark.parametrize("alpha", [-0.1, 0.0, 0.5, 1.5])
def test_bstar_closed_form_on_radial_field(alpha):
    # v = 0 kills six of the eight terms; the two mean terms reduce to
    # 4 pi c_a (1 + a(2a+3)/(3(a+2))) |A|^2 int p'^2 r dr
    p = ElasticParameter(alpha)
    field = RadialField(AMP, PROFILE)
    a2 = float(AMP @ AMP)
    predicted = (4.0 * math.pi * p.c_alpha * a2
                 * (1.0 + alpha * (2.0 * alpha + 3.0) / (3.0 * (alpha + 2.0)))
                 * RADIAL_I)
    assert bstar_form(p, field, GRID) == pytest.approx(predicted, rel=1e-6)


def test_gradient_weight_closed_form_on_radial_field():
    field = RadialField(AMP, PROFILE)
    predicted = float(AMP @ AMP) * 4.0 * math.pi * RADIAL_I
    assert gradient_weight_integral(field, GRID) == pytest.approx(
        predicted, rel=1e-6
    )


def test_point_term_is_half_origin_value():
    field = random_field_spec(2).build()
    red = reduce_field(field, GRID)
    u0 = np.asarray(field.value(np.zeros(3)))
    assert red.point == pytest.approx(0.5 * float(u0 @ u0), rel=1e-14)


@pytest.mark.parametrize("alpha", [-0.1, 0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_identity_on_random_fields(alpha, seed):
    rep = identity_residual(
        ElasticParameter(alpha), random_field_spec(seed).build(), GRID
    )
    assert abs(rep.residual) <= 1e-6 * rep.scale
    assert rep.passed
    assert rep.residual == pytest.approx(
        rep.lhs - rep.point_term - rep.bstar, abs=1e-15
    )


def test_identity_on_radial_field():
    # the plateau profile is rougher than the bump sums, so the default
    # grid only reaches ~1e-5 absolute here; the point is that the
    # identity closes at all with zero fluctuation
    rep = identity_residual(ElasticParameter(0.5), RadialField(AMP, PROFILE),
                            GRID, rtol=1e-4)
    assert abs(rep.residual) <= 1e-4 * rep.scale


def test_identity_on_origin_excluded_field():
    field = random_field_spec(9, origin_excluded=True).build()
    rep = identity_residual(ElasticParameter(1.0), field, GRID)
    assert rep.point_term == 0.0
    assert abs(rep.residual) <= 1e-6 * rep.scale


def test_residual_shrinks_under_refinement():
    field = random_field_spec(11).build()
    p = ElasticParameter(0.5)
    coarse = identity_residual(p, field, build_polar_grid(16, 32, 8, 8, 8.0))
    fine = identity_residual(p, field, GRID)
    assert abs(fine.residual) < abs(coarse.residual)


def test_form_is_quadratic():
    # parallelogram law for the underlying bilinear form
    p = ElasticParameter(0.8)
    u = random_field_spec(20).build()
    v = random_field_spec(21).build()
    s = lhs_form(p, SumField(u, v), GRID)
    d = lhs_form(p, SumField(u, v, sign=-1.0), GRID)
    fu = lhs_form(p, u, GRID)
    fv = lhs_form(p, v, GRID)
    scale = abs(fu) + abs(fv) + 1.0
    assert s + d == pytest.approx(2.0 * (fu + fv), abs=1e-8 * scale)


def test_form_is_scale_invariant():
    # F(u(lam .)) = F(u): degree -1 weight against the lam^2 of L and
    # the lam^-3 of the volume element cancel exactly
    p = ElasticParameter(0.5)
    u = random_field_spec(22, support_radius=3.5).build()
    base = lhs_form(p, u, GRID)
    for lam in (0.5, 2.0):
        scaled = lhs_form(p, ScaledField(u, lam), GRID)
        assert scaled == pytest.approx(base, rel=2e-4)


def test_pole_translation():
    p = ElasticParameter(0.5)
    u = random_field_spec(23).build()
    y = np.array([0.4, -0.2, 0.3])
    via_flag = lhs_form(p, u, GRID, y=y)
    via_shift = lhs_form(p, ShiftedField(u, -y), GRID)
    assert via_flag == pytest.approx(via_shift, rel=1e-12)
    # identity holds with the shifted pole; the point term moves to u(y)
    rep = identity_residual(p, ShiftedField(u, -y), GRID)
    uy = np.asarray(u.value(y))
    assert rep.point_term == pytest.approx(0.5 * float(uy @ uy), rel=1e-13)
    assert abs(rep.residual) <= 1e-6 * rep.scale


def test_identity_suite_layout():
    fields = [random_field_spec(s).build() for s in range(2)]
    reports = identity_suite(fields, [0.0, 1.0], GRID)
    assert len(reports) == 4
    assert [r.alpha for r in reports] == [0.0, 1.0, 0.0, 1.0]
    assert all(r.passed for r in reports)


def test_support_exceeding_grid_rejected():
    field = random_field_spec(1, support_radius=9.0).build()
    with pytest.raises(NonCompactSupportError):
        reduce_field(field, GRID)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_coercivity_on_sample_fields(alpha):
    p = ElasticParameter(alpha)
    lam = float(np.linalg.eigvalsh(
        b_plus(alpha) if alpha >= 0.0 else b_minus(alpha))[0])
    for seed in (0, 3, 5):
        rep = coercivity_check(p, random_field_spec(seed).build(), GRID)
        assert rep.lambda_min == pytest.approx(lam, rel=1e-13)
        assert rep.bound == pytest.approx(p.c_alpha * lam * 0.999, rel=1e-13)
        assert rep.ratio >= rep.bound
        assert rep.passed
        assert rep.denominator > 0.0
        assert rep.numerator == pytest.approx(rep.ratio * rep.denominator,
                                              rel=1e-12)


def test_coercivity_needs_gradient_energy():
    flat = RadialField(np.zeros(3), PROFILE)
    with pytest.raises(InvalidParameterError):
        coercivity_check(ElasticParameter(0.5), flat, GRID)


def test_search_empty_inside_region():
    res = counterexample_search(ElasticParameter(0.5), budget=40, seed=1)
    assert not res.found
    assert res.evaluations >= 20
    assert res.value > 0.0
    again = counterexample_search(ElasticParameter(0.5), budget=40, seed=1)
    assert again.value == res.value
    assert again.spec == res.spec


def test_search_validation():
    with pytest.raises(InvalidParameterError):
        counterexample_search(ElasticParameter(0.5), budget=5)
    with pytest.raises(InvalidParameterError):
        counterexample_search(ElasticParameter(0.5), budget=100, workers=0)
