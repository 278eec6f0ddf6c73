"""Field constructions against finite-difference oracles and exact
support properties."""

import numpy as np
import pytest

from lamelab.fields import (
    Bump,
    BumpField,
    InnerCutoff,
    PlateauProfile,
    PolynomialField,
    ProductField,
    RadialField,
    ScaledField,
    ShiftedField,
    TestFieldSpec,
    field_tables,
    random_field_spec,
)

from conftest import fd_jacobian, fd_hessians


def sample_points(rng, n, radius):
    return rng.uniform(-radius, radius, size=(n, 3))


@pytest.mark.parametrize("seed", range(6))
def test_bump_field_derivatives_match_fd(seed):
    field = random_field_spec(seed).build()
    rng = np.random.default_rng(200 + seed)
    pts = sample_points(rng, 30, 0.8 * field.support_radius)
    scale = float(np.max(np.abs(field.value(pts)))) + 1.0
    assert np.max(np.abs(field.jacobian(pts) - fd_jacobian(field, pts))) \
        < 1e-6 * scale
    assert np.max(np.abs(field.hessians(pts) - fd_hessians(field, pts))) \
        < 1e-5 * scale


def test_bump_field_exact_support():
    field = random_field_spec(3).build()
    R = field.support_radius
    rng = np.random.default_rng(7)
    d = rng.normal(size=(20, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    far = d * rng.uniform(R, 3.0 * R, size=(20, 1))
    # the envelope clamps to exactly zero, not merely something small
    assert np.all(field.value(far) == 0.0)
    assert np.all(field.jacobian(far) == 0.0)
    assert np.all(field.hessians(far) == 0.0)


def test_bump_field_flat_region_matches_raw_sum():
    b = Bump(center=(0.3, -0.2, 0.1), radius=0.5, amplitude=(1.0, 2.0, -1.0))
    field = BumpField([b], support_radius=6.0)
    rng = np.random.default_rng(8)
    pts = sample_points(rng, 25, 1.5)       # well inside 0.75 * 6
    y = pts - np.asarray(b.center)
    core = np.exp(-np.sum(y * y, axis=-1) / (2.0 * 0.5**2))
    expected = core[:, None] * np.asarray(b.amplitude)
    np.testing.assert_allclose(field.value(pts), expected, rtol=1e-13)


def test_inner_cutoff_zeroes_a_ball():
    field = random_field_spec(1).build()
    cut = BumpField(field.bumps, field.support_radius, inner_cutoff=0.4)
    rng = np.random.default_rng(9)
    d = rng.normal(size=(20, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    inner = d * rng.uniform(0.0, 0.4, size=(20, 1))
    assert np.all(cut.value(inner) == 0.0)
    outer = d * rng.uniform(0.9, 1.2, size=(20, 1))
    np.testing.assert_allclose(cut.value(outer), field.value(outer), rtol=1e-12)
    # derivatives stay consistent through both radial factors
    pts = d * rng.uniform(0.3, 1.0, size=(20, 1))
    assert np.max(np.abs(cut.jacobian(pts) - fd_jacobian(cut, pts))) < 1e-6


def test_bump_center_outside_flat_region_rejected():
    b = Bump(center=(5.0, 0.0, 0.0), radius=0.3, amplitude=(1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        BumpField([b], support_radius=6.0)
    with pytest.raises(ValueError):
        BumpField([], support_radius=6.0)


def test_polynomial_field_closed_forms():
    rng = np.random.default_rng(10)
    c0 = rng.normal(size=3)
    c1 = rng.normal(size=(3, 3))
    c2 = rng.normal(size=(3, 3, 3))
    c2 = 0.5 * (c2 + c2.transpose(0, 2, 1))
    f = PolynomialField(c0, c1, c2)
    pts = sample_points(rng, 20, 2.0)
    expected = (c0 + pts @ c1.T
                + np.einsum("nj,ijk,nk->ni", pts, c2, pts))
    np.testing.assert_allclose(f.value(pts), expected, rtol=1e-14)
    np.testing.assert_allclose(f.jacobian(pts), fd_jacobian(f, pts),
                               rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(f.hessians(pts), fd_hessians(f, pts),
                               rtol=1e-6, atol=1e-7)
    with pytest.raises(ValueError):
        PolynomialField(c2=np.arange(27.0).reshape(3, 3, 3))


def test_profiles_and_product_field():
    prof = PlateauProfile(1.0, 2.0)
    p, dp, _ = prof(np.array([0.5, 1.5, 2.5]))
    assert p[0] == 1.0 and dp[0] == 0.0
    assert 0.0 < p[1] < 1.0 and dp[1] < 0.0
    assert p[2] == 0.0 and dp[2] == 0.0
    cut = InnerCutoff(0.5, 1.0)
    c, dc, _ = cut(np.array([0.25, 0.75, 1.5]))
    assert c[0] == 0.0 and c[2] == 1.0 and dc[1] > 0.0
    with pytest.raises(ValueError):
        PlateauProfile(2.0, 1.0)
    with pytest.raises(ValueError):
        InnerCutoff(0.0, 1.0)

    base = PolynomialField(c1=np.diag([1.0, -0.5, 2.0]))
    pf = ProductField(base, prof)
    assert pf.support_radius == 2.0
    rng = np.random.default_rng(11)
    pts = sample_points(rng, 25, 1.8)
    assert np.max(np.abs(pf.jacobian(pts) - fd_jacobian(pf, pts))) < 1e-6
    assert np.max(np.abs(pf.hessians(pts) - fd_hessians(pf, pts))) < 1e-5


def test_radial_field_is_radial():
    prof = PlateauProfile(1.0, 3.0)
    amp = np.array([2.0, -1.0, 0.5])
    f = RadialField(amp, prof)
    rng = np.random.default_rng(12)
    d = rng.normal(size=(15, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(0.1, 2.9, size=(15, 1))
    vals = f.value(d * r)
    profile_vals = prof(r[:, 0])[0]
    np.testing.assert_allclose(vals, profile_vals[:, None] * amp, rtol=1e-13)


def test_shifted_field():
    base = random_field_spec(4).build()
    shift = np.array([0.5, -0.3, 0.8])
    f = ShiftedField(base, shift)
    rng = np.random.default_rng(13)
    pts = sample_points(rng, 20, 3.0)
    np.testing.assert_allclose(f.value(pts), base.value(pts - shift), rtol=1e-14)
    assert f.support_radius == pytest.approx(
        base.support_radius + float(np.linalg.norm(shift))
    )
    U, J, H = field_tables(f, pts)
    np.testing.assert_allclose(J, base.jacobian(pts - shift), rtol=1e-14)
    np.testing.assert_allclose(H, base.hessians(pts - shift), rtol=1e-14)


def test_scaled_field():
    base = random_field_spec(5).build()
    f = ScaledField(base, 2.0)
    rng = np.random.default_rng(14)
    pts = sample_points(rng, 20, 1.4)
    np.testing.assert_allclose(f.value(pts), base.value(2.0 * pts), rtol=1e-14)
    np.testing.assert_allclose(f.jacobian(pts), 2.0 * base.jacobian(2.0 * pts),
                               rtol=1e-14)
    np.testing.assert_allclose(f.hessians(pts), 4.0 * base.hessians(2.0 * pts),
                               rtol=1e-14)
    assert f.support_radius == pytest.approx(base.support_radius / 2.0)
    assert np.max(np.abs(f.jacobian(pts) - fd_jacobian(f, pts))) < 1e-5
    with pytest.raises(ValueError):
        ScaledField(base, 0.0)


def test_field_tables_consistency():
    field = random_field_spec(6).build()
    rng = np.random.default_rng(15)
    pts = sample_points(rng, 10, 2.0)
    U, J, H = field_tables(field, pts)
    np.testing.assert_array_equal(U, field.value(pts))
    np.testing.assert_array_equal(J, field.jacobian(pts))
    np.testing.assert_array_equal(H, field.hessians(pts))

    class Bare:
        support_radius = 1.0

        def value(self, x):
            return np.zeros_like(np.asarray(x, dtype=float))

        def jacobian(self, x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1] + (3, 3))

        def hessians(self, x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1] + (3, 3, 3))

    U, J, H = field_tables(Bare(), pts)
    assert U.shape == (10, 3) and J.shape == (10, 3, 3)


def test_spec_build_and_origin_exclusion():
    spec = random_field_spec(0)
    field = spec.build()
    assert float(np.linalg.norm(field.value(np.zeros(3)))) > 0.0

    excl = random_field_spec(0, origin_excluded=True)
    f2 = excl.build()
    assert f2.inner_cutoff == pytest.approx(0.05 * excl.support_radius)
    assert np.all(f2.value(np.zeros((1, 3))) == 0.0)


def test_random_spec_reproducible():
    a = random_field_spec(42)
    b = random_field_spec(42)
    assert a == b
    assert random_field_spec(43) != a
    assert isinstance(a, TestFieldSpec)
    # first bump must cover the origin so the point term is exercised
    assert np.linalg.norm(a.bumps[0].center) <= 0.3 * np.sqrt(3.0) + 1e-12
    with pytest.raises(ValueError):
        random_field_spec(0, n_bumps=0)
    with pytest.raises(ValueError):
        random_field_spec(0, n_bumps=7)
