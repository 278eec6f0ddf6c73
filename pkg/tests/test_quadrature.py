import math

import numpy as np
import pytest

from lamelab.errors import InvalidParameterError, NonCompactSupportError
from lamelab.quadrature import (
    composite_radial_rule,
    build_polar_grid,
    default_polar_grid,
    product_sphere_rule,
    sphere_integrate,
    spherical_mean,
    volume_integrate_polar,
)

FOUR_PI = 4.0 * math.pi


def test_sphere_rule_weights_and_nodes():
    rule = product_sphere_rule(16, 32)
    assert len(rule) == 16 * 32
    assert np.all(rule.weights > 0.0)
    assert math.fsum(rule.weights) == pytest.approx(FOUR_PI, abs=1e-12)
    np.testing.assert_allclose(
        np.linalg.norm(rule.points, axis=1), 1.0, rtol=1e-14
    )


def test_sphere_moments_exact():
    rule = product_sphere_rule(8, 16)
    # int x^2 = 4 pi / 3, int x^2 y^2 = 4 pi / 15, int x^4 = 4 pi / 5
    assert sphere_integrate(rule, lambda w: w[:, 0] ** 2) == pytest.approx(
        FOUR_PI / 3.0, rel=1e-13
    )
    assert sphere_integrate(
        rule, lambda w: w[:, 0] ** 2 * w[:, 1] ** 2
    ) == pytest.approx(FOUR_PI / 15.0, rel=1e-13)
    assert sphere_integrate(rule, lambda w: w[:, 2] ** 4) == pytest.approx(
        FOUR_PI / 5.0, rel=1e-13
    )
    # odd moments vanish
    assert abs(sphere_integrate(rule, lambda w: w[:, 0])) < 1e-14
    assert abs(sphere_integrate(rule, lambda w: w[:, 0] * w[:, 1] ** 2)) < 1e-14


def test_sphere_integrate_vector_values():
    rule = product_sphere_rule(6, 12)
    out = sphere_integrate(rule, lambda w: w**2)
    np.testing.assert_allclose(out, np.full(3, FOUR_PI / 3.0), rtol=1e-13)


def test_radial_rule_exactness():
    rule = composite_radial_rule(4, 8, r_max=3.0)
    assert np.all(rule.nodes > 0.0)
    assert rule.nodes.max() < 3.0
    for k in range(rule.exactness_degree + 1):
        got = float(np.sum(rule.weights * rule.nodes**k))
        assert got == pytest.approx(3.0 ** (k + 1) / (k + 1), rel=1e-13)


@pytest.mark.parametrize(
    "bad",
    [
        lambda: product_sphere_rule(0, 8),
        lambda: product_sphere_rule(8, 0),
        lambda: composite_radial_rule(0, 8, 1.0),
        lambda: composite_radial_rule(4, 8, -1.0),
    ],
)
def test_rule_validation(bad):
    with pytest.raises(InvalidParameterError):
        bad()


def test_ball_volume():
    grid = default_polar_grid(r_max=2.0)
    vol = volume_integrate_polar(
        grid, lambda r, w: np.ones_like(r), support_tol=2.0
    )
    assert vol == pytest.approx(FOUR_PI / 3.0 * 8.0, rel=1e-12)


def test_polynomial_volume_closed_form():
    # int over B_R of (1 - (r/R)^2)^2 dx = 32 pi R^3 / 105
    R = 5.0
    grid = default_polar_grid(r_max=R)
    val = volume_integrate_polar(grid, lambda r, w: (1.0 - (r / R) ** 2) ** 2)
    assert val == pytest.approx(32.0 * math.pi * R**3 / 105.0, rel=1e-12)


def test_singular_weights_integrable():
    # int r^-2 * smooth cutoff stays finite and matches the 1d reduction
    R = 4.0
    grid = build_polar_grid(16, 32, 32, 8, R)

    def g(r, w):
        return (1.0 - (r / R) ** 2) ** 3 / r**2

    val = volume_integrate_polar(grid, g, singular_power=2)
    # 4 pi int_0^R (1 - (r/R)^2)^3 dr = 4 pi R 16/35
    assert val == pytest.approx(FOUR_PI * R * 16.0 / 35.0, rel=1e-12)


def test_noncompact_support_rejected():
    grid = default_polar_grid(r_max=2.0)
    with pytest.raises(NonCompactSupportError):
        volume_integrate_polar(grid, lambda r, w: np.ones_like(r))


def test_singular_power_validation():
    grid = default_polar_grid()
    with pytest.raises(InvalidParameterError):
        volume_integrate_polar(grid, lambda r, w: np.zeros_like(r),
                               singular_power=3)


def test_spherical_mean_harmonic():
    # mean value property: means of harmonic polynomials hit the center value
    rule = product_sphere_rule(12, 24)

    def u(x):
        return x[:, 0] ** 2 - x[:, 1] ** 2 + 3.0

    for r in (0.0, 0.5, 2.0):
        assert float(spherical_mean(rule, u, r)) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        spherical_mean(rule, u, -1.0)


def test_refined_grid_metadata():
    grid = default_polar_grid()
    fine = grid.refined(2)
    assert len(fine.sphere) == 4 * len(grid.sphere)
    assert fine.radial.nodes.shape[0] == 2 * grid.radial.nodes.shape[0]
    assert fine.r_max == grid.r_max
    pts = grid.points()
    assert pts.shape == (grid.radial.nodes.shape[0] * len(grid.sphere), 3)


def test_rules_deterministic():
    a = build_polar_grid(8, 16, 4, 6, 3.0)
    b = build_polar_grid(8, 16, 4, 6, 3.0)
    np.testing.assert_array_equal(a.sphere.points, b.sphere.points)
    np.testing.assert_array_equal(a.radial.weights, b.radial.weights)
