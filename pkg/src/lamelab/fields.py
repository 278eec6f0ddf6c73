"""Smooth compactly supported test fields with analytic derivatives.

Every field here implements the same small interface (support_radius,
value, jacobian, hessians) so that quadrature code never needs to know
how a field was built.  The basic brick is the classical bump

    b(x) = exp(1 - 1/(1 - s)),   s = |x - c|^2 / rho^2,   s < 1,

extended by zero, optionally multiplied by a polynomial of degree <= 2.
Radial envelopes (plateau profiles and inner cutoffs) are built from the
C-infinity step sigma(t)/(sigma(t) + sigma(1-t)) with sigma(t) = e^{-1/t}.

Derivatives are assembled by hand through the chain rule; the point of
carrying second derivatives analytically is that the Lame operator can
then be applied exactly, with no finite-difference noise, which the
integral identities downstream need at the 1e-6 level and below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Bump",
    "BumpField",
    "PolynomialField",
    "PlateauProfile",
    "InnerCutoff",
    "ProductField",
    "RadialField",
    "ShiftedField",
    "ScaledField",
    "TestFieldSpec",
    "field_tables",
    "random_field_spec",
]

# inside the clamp bands the step factors exp(-1/t) are below e^-200,
# i.e. exactly 0.0 in double precision, so clipping loses nothing and
# avoids overflow in the 1/t^4 factors of the second derivative.
_TAU = 5.0e-3


def _bump_profile(s: np.ndarray):
    """Value and first two derivatives in s of b(s) = exp(-s/2)."""
    b = np.exp(-0.5 * s)
    return b, -0.5 * b, 0.25 * b


def _step_profile(t: np.ndarray):
    """C-infinity step S(t): 0 for t <= 0, 1 for t >= 1, with S', S''."""
    t = np.asarray(t, dtype=float)
    lo = t <= _TAU
    hi = t >= 1.0 - _TAU
    mid = ~(lo | hi)
    tc = np.clip(t, _TAU, 1.0 - _TAU)
    g = np.exp(-1.0 / tc)
    h = np.exp(-1.0 / (1.0 - tc))
    gp = g / tc**2
    hp = -h / (1.0 - tc) ** 2
    gpp = g * (1.0 - 2.0 * tc) / tc**4
    hpp = h * (1.0 - 2.0 * (1.0 - tc)) / (1.0 - tc) ** 4
    den = g + h
    s = g / den
    sp = (gp * h - g * hp) / den**2
    spp = ((gpp * h - g * hpp) * den - 2.0 * (gp * h - g * hp) * (gp + hp)) / den**3
    s = np.where(lo, 0.0, np.where(hi, 1.0, s))
    sp = np.where(mid, sp, 0.0)
    spp = np.where(mid, spp, 0.0)
    return s, sp, spp


@dataclass(frozen=True)
class Bump:
    """One smooth lump: amplitude * poly(y) * exp(-|y|^2 / (2 radius^2)).

    y = x - center; poly2 must be symmetric and the modulation is
    poly0 + poly1 . y + y^T poly2 y.  Compact support comes from the
    radial envelope that BumpField wraps around the whole sum, so the
    entire-function core here costs the quadrature nothing.
    """

    center: tuple[float, float, float]
    radius: float
    amplitude: tuple[float, float, float]
    poly0: float = 1.0
    poly1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    poly2: tuple[tuple[float, ...], ...] = ((0.0,) * 3,) * 3


def _eval_bump(bump: Bump, x: np.ndarray):
    """Scalar factor F = poly * b and its two derivative tensors.

    Returns (F, DF, D2F) with shapes (n,), (n, 3), (n, 3, 3).
    """
    c = np.asarray(bump.center, dtype=float)
    rho2 = bump.radius**2
    y = x - c
    s = np.sum(y * y, axis=-1) / rho2
    b, db, d2b = _bump_profile(s)
    ds = 2.0 * y / rho2                       # ds/dy_k, (n, 3)
    DB = db[:, None] * ds                     # (n, 3)
    D2B = (d2b[:, None, None] * ds[:, :, None] * ds[:, None, :]
           + db[:, None, None] * (2.0 / rho2) * np.eye(3))

    p1 = np.asarray(bump.poly1, dtype=float)
    p2 = np.asarray(bump.poly2, dtype=float)
    m = bump.poly0 + y @ p1 + np.einsum("nj,jk,nk->n", y, p2, y)
    Dm = p1 + 2.0 * (y @ p2)                  # (n, 3)
    D2m = 2.0 * p2                            # (3, 3)

    F = m * b
    DF = Dm * b[:, None] + m[:, None] * DB
    D2F = (D2m * b[:, None, None]
           + Dm[:, :, None] * DB[:, None, :]
           + Dm[:, None, :] * DB[:, :, None]
           + m[:, None, None] * D2B)
    return F, DF, D2F


def _apply_radial_factor(r, w, U, J, H, p, dp, d2p):
    """Multiply a field (U, J, H) by a radial scalar p(|x|) in place.

    w is x/|x|; dp and d2p must vanish wherever r does (flat profiles),
    which keeps the 1/r in the angular Hessian term harmless.
    """
    safe_r = np.where(r > 0.0, r, 1.0)
    if H is not None:
        ang = (d2p[:, None, None] * w[:, :, None] * w[:, None, :]
               + (dp / safe_r)[:, None, None]
               * (np.eye(3) - w[:, :, None] * w[:, None, :]))
        # D_j D_k (U_i p) = H[i,j,k] p + J[k,i] p' w_j + J[j,i] p' w_k
        #                   + U_i (p'' w_j w_k + p' (d_jk - w_j w_k)/r)
        H_new = H * p[:, None, None, None]
        H_new += np.einsum("nki,nj->nijk", J, dp[:, None] * w)
        H_new += np.einsum("nji,nk->nijk", J, dp[:, None] * w)
        H_new += U[:, :, None, None] * ang[:, None, :, :]
    else:
        H_new = None
    J_new = J * p[:, None, None] + (dp[:, None] * w)[:, :, None] * U[:, None, :]
    U_new = U * p[:, None]
    return U_new, J_new, H_new


class BumpField:
    """Sum of polynomial-modulated lumps under a compactifying envelope.

    The sum is multiplied by a radial plateau that equals 1 out to
    0.75 * support_radius and vanishes smoothly at support_radius, so
    the field is exactly zero beyond its declared support whatever the
    lump tails do.  With inner_cutoff = r0 > 0 it is also multiplied by
    a radial step vanishing for |x| <= r0 and equal to 1 for |x| >= 2 r0.
    """

    def __init__(self, bumps, support_radius: float, inner_cutoff: float = 0.0):
        bumps = tuple(bumps)
        if not bumps:
            raise ValueError("need at least one bump")
        flat = 0.75 * support_radius
        far = max(float(np.linalg.norm(b.center)) for b in bumps)
        if far > flat + 1e-12:
            raise ValueError(
                f"lump center at radius {far:.3f} outside the flat region "
                f"{flat:.3f} of the support envelope"
            )
        self.bumps = bumps
        self.support_radius = float(support_radius)
        self.inner_cutoff = float(inner_cutoff)

    def _tables(self, x, need_hess: bool):
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        n = x.shape[0]
        U = np.zeros((n, 3))
        J = np.zeros((n, 3, 3))
        H = np.zeros((n, 3, 3, 3)) if need_hess else None
        for bump in self.bumps:
            F, DF, D2F = _eval_bump(bump, x)
            a = np.asarray(bump.amplitude, dtype=float)
            U += F[:, None] * a
            J += DF[:, :, None] * a             # [k, i] = a_i DF_k
            if need_hess:
                H += a[None, :, None, None] * D2F[:, None, :, :]
        r = np.sqrt(np.sum(x * x, axis=-1))
        w = x / np.where(r > 0.0, r, 1.0)[:, None]
        flat = 0.75 * self.support_radius
        band = self.support_radius - flat
        env, denv, d2env = _step_profile((r - flat) / band)
        U, J, H = _apply_radial_factor(
            r, w, U, J, H, 1.0 - env, -denv / band, -d2env / band**2)
        if self.inner_cutoff > 0.0:
            r0 = self.inner_cutoff
            t = (r - r0) / r0                    # step over [r0, 2 r0]
            chi, dchi, d2chi = _step_profile(t)
            U, J, H = _apply_radial_factor(
                r, w, U, J, H, chi, dchi / r0, d2chi / r0**2)
        return U, J, H

    def value(self, x):
        x = np.asarray(x, dtype=float)
        U, _, _ = self._tables(x, need_hess=False)
        return U.reshape(x.shape)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        _, J, _ = self._tables(x, need_hess=False)
        return J.reshape(x.shape[:-1] + (3, 3))

    def hessians(self, x):
        x = np.asarray(x, dtype=float)
        _, _, H = self._tables(x, need_hess=True)
        return H.reshape(x.shape[:-1] + (3, 3, 3))

    def tables(self, x):
        """Value, jacobian and hessians from one evaluation sweep."""
        x = np.asarray(x, dtype=float)
        U, J, H = self._tables(x, need_hess=True)
        return (U.reshape(x.shape), J.reshape(x.shape[:-1] + (3, 3)),
                H.reshape(x.shape[:-1] + (3, 3, 3)))


class PolynomialField:
    """u_i = c0_i + c1[i, :] . x + x^T c2[i] x.  Not compactly supported.

    Meant to be wrapped by ProductField with a plateau envelope.
    """

    def __init__(self, c0=None, c1=None, c2=None):
        self.c0 = np.zeros(3) if c0 is None else np.asarray(c0, dtype=float)
        self.c1 = np.zeros((3, 3)) if c1 is None else np.asarray(c1, dtype=float)
        self.c2 = np.zeros((3, 3, 3)) if c2 is None else np.asarray(c2, dtype=float)
        if not np.allclose(self.c2, self.c2.transpose(0, 2, 1)):
            raise ValueError("quadratic coefficients must be symmetric")
        self.support_radius = np.inf

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return (self.c0 + x @ self.c1.T
                + np.einsum("...j,ijk,...k->...i", x, self.c2, x))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        # [k, i] = c1[i, k] + 2 (c2[i] x)_k
        lin = np.broadcast_to(self.c1.T, x.shape[:-1] + (3, 3)).copy()
        return lin + 2.0 * np.einsum("ikj,...j->...ki", self.c2, x)

    def hessians(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(2.0 * self.c2, x.shape[:-1] + (3, 3, 3)).copy()


@dataclass(frozen=True)
class PlateauProfile:
    """p(r) = 1 for r <= flat_radius, 0 for r >= outer_radius, smooth between."""

    flat_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0.0 < self.flat_radius < self.outer_radius:
            raise ValueError("need 0 < flat_radius < outer_radius")

    def __call__(self, r):
        band = self.outer_radius - self.flat_radius
        s, sp, spp = _step_profile((r - self.flat_radius) / band)
        return 1.0 - s, -sp / band, -spp / band**2


@dataclass(frozen=True)
class InnerCutoff:
    """p(r) = 0 for r <= inner_radius, 1 for r >= rise_radius."""

    inner_radius: float
    rise_radius: float

    def __post_init__(self):
        if not 0.0 < self.inner_radius < self.rise_radius:
            raise ValueError("need 0 < inner_radius < rise_radius")

    def __call__(self, r):
        band = self.rise_radius - self.inner_radius
        s, sp, spp = _step_profile((r - self.inner_radius) / band)
        return s, sp / band, spp / band**2


class ProductField:
    """base field times a radial envelope p(|x|)."""

    def __init__(self, base, profile):
        self.base = base
        self.profile = profile
        outer = getattr(profile, "outer_radius", None)
        self.support_radius = float(outer) if outer is not None else base.support_radius

    def _tables(self, x, need_hess):
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        r = np.sqrt(np.sum(x * x, axis=-1))
        w = x / np.where(r > 0.0, r, 1.0)[:, None]
        p, dp, d2p = self.profile(r)
        U = self.base.value(x)
        J = self.base.jacobian(x)
        H = self.base.hessians(x) if need_hess else None
        return _apply_radial_factor(r, w, U, J, H, p, dp, d2p)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        U, _, _ = self._tables(x, need_hess=False)
        return U.reshape(x.shape)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        _, J, _ = self._tables(x, need_hess=False)
        return J.reshape(x.shape[:-1] + (3, 3))

    def hessians(self, x):
        x = np.asarray(x, dtype=float)
        _, _, H = self._tables(x, need_hess=True)
        return H.reshape(x.shape[:-1] + (3, 3, 3))

    def tables(self, x):
        x = np.asarray(x, dtype=float)
        U, J, H = self._tables(x, need_hess=True)
        return (U.reshape(x.shape), J.reshape(x.shape[:-1] + (3, 3)),
                H.reshape(x.shape[:-1] + (3, 3, 3)))


class RadialField(ProductField):
    """u(x) = amplitude * p(|x|): purely radial, fluctuation-free."""

    def __init__(self, amplitude, profile):
        base = PolynomialField(c0=np.asarray(amplitude, dtype=float))
        super().__init__(base, profile)


class ShiftedField:
    """u_y(x) = u(x - shift); support moves with the shift."""

    def __init__(self, base, shift):
        self.base = base
        self.shift = np.asarray(shift, dtype=float)
        self.support_radius = base.support_radius + float(np.linalg.norm(self.shift))

    def value(self, x):
        return self.base.value(np.asarray(x, dtype=float) - self.shift)

    def jacobian(self, x):
        return self.base.jacobian(np.asarray(x, dtype=float) - self.shift)

    def hessians(self, x):
        return self.base.hessians(np.asarray(x, dtype=float) - self.shift)

    def tables(self, x):
        return field_tables(self.base, np.asarray(x, dtype=float) - self.shift)


class ScaledField:
    """u_lam(x) = u(lam x); jacobian scales by lam, hessians by lam^2."""

    def __init__(self, base, lam: float):
        if lam <= 0.0:
            raise ValueError("scale must be positive")
        self.base = base
        self.lam = float(lam)
        self.support_radius = base.support_radius / lam

    def value(self, x):
        return self.base.value(self.lam * np.asarray(x, dtype=float))

    def jacobian(self, x):
        return self.lam * self.base.jacobian(self.lam * np.asarray(x, dtype=float))

    def hessians(self, x):
        return self.lam**2 * self.base.hessians(self.lam * np.asarray(x, dtype=float))

    def tables(self, x):
        U, J, H = field_tables(self.base, self.lam * np.asarray(x, dtype=float))
        return U, self.lam * J, self.lam**2 * H


def field_tables(field, x):
    """(value, jacobian, hessians) at x, via one sweep when supported."""
    fn = getattr(field, "tables", None)
    if fn is not None:
        return fn(x)
    return field.value(x), field.jacobian(x), field.hessians(x)


@dataclass(frozen=True)
class TestFieldSpec:
    """Reproducible description of a bump-sum field.

    The spec, not the field object, is what search routines mutate and
    what result files record; build() turns it into the actual field.
    """

    bumps: tuple[Bump, ...]
    seed: int
    support_radius: float = 6.0
    origin_excluded: bool = False

    def build(self) -> BumpField:
        cutoff = 0.05 * self.support_radius if self.origin_excluded else 0.0
        return BumpField(self.bumps, self.support_radius, inner_cutoff=cutoff)


def random_field_spec(
    seed: int,
    n_bumps: int = 3,
    support_radius: float = 6.0,
    origin_excluded: bool = False,
) -> TestFieldSpec:
    """Draw a reproducible random field spec.

    The first bump covers the origin (so the point term of the weighted
    identity is exercised) unless origin_excluded is set, in which case
    all bumps keep clear of the cutoff ball.
    """
    if not 1 <= n_bumps <= 6:
        raise ValueError("n_bumps must be between 1 and 6")
    rng = np.random.default_rng(seed)
    bumps = []
    for b in range(n_bumps):
        radius = rng.uniform(0.22, 0.30)
        if b == 0 and not origin_excluded:
            center = rng.uniform(-0.3, 0.3, size=3)
        else:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            dist = rng.uniform(0.6, 1.6)
            if origin_excluded:
                dist = max(dist, 0.1 * support_radius + 2.0 * radius)
            center = dist * direction
        amplitude = rng.uniform(-1.0, 1.0, size=3)
        poly1 = rng.uniform(-0.3, 0.3, size=3)
        q = rng.uniform(-0.15, 0.15, size=(3, 3))
        poly2 = 0.5 * (q + q.T)
        bumps.append(
            Bump(
                center=tuple(center),
                radius=float(radius),
                amplitude=tuple(amplitude),
                poly0=float(rng.uniform(0.6, 1.4)),
                poly1=tuple(poly1),
                poly2=tuple(map(tuple, poly2)),
            )
        )
    return TestFieldSpec(
        bumps=tuple(bumps),
        seed=seed,
        support_radius=support_radius,
        origin_excluded=origin_excluded,
    )
