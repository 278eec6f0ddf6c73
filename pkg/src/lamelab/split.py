"""Spherical-mean decomposition u = ubar(r) + v and sphere inequalities.

For a smooth field u the spherical mean

    ubar_i(r) = (4 pi)^{-1} int_{S^2} u_i(r w) dsigma(w)

is a radial vector function; the fluctuation v = u - ubar has zero mean
on every sphere.  The radial derivative of the mean is obtained without
differentiating through the quadrature:

    D_r ubar_i(r) = (4 pi)^{-1} int_{S^2} w_k (D_k u_i)(r w) dsigma,

and the jacobian of the (radial) mean part is the rank-one tensor
w (x) D_r ubar, so Dv = Du - w (x) D_r ubar on each sphere.

The two inequalities checked here are the sphere Poincare inequality
|v|_w^2 <= (r^2/2) |Dv|_w^2 (first nonzero Laplace-Beltrami eigenvalue 2)
and the pointwise bound |div v|_w^2 <= 3 |Dv|_w^2, where |.|_w is the
L^2 norm over the unit sphere at radius r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import FOUR_PI, PolarGrid, SphereRule, volume_integrate_polar

__all__ = [
    "SplitField",
    "split",
    "orthogonality_check",
    "poincare_sphere_check",
    "div_bound_check",
]


@dataclass(frozen=True)
class SplitField:
    """A field together with the sphere rule that defines its splitting."""

    base: object
    rule: SphereRule

    def mean(self, r) -> np.ndarray:
        """ubar(r), shape (3,) for scalar r or (n, 3) for an array."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        pts = r_arr[:, None, None] * self.rule.points[None, :, :]
        vals = self.base.value(pts)                       # (n, m, 3)
        out = np.einsum("j,njc->nc", self.rule.weights, vals) / FOUR_PI
        return out[0] if np.ndim(r) == 0 else out

    def mean_derivative(self, r) -> np.ndarray:
        """D_r ubar(r) from the sphere average of w . Du."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        pts = r_arr[:, None, None] * self.rule.points[None, :, :]
        jac = self.base.jacobian(pts)                     # (n, m, 3, 3)
        radial = np.einsum("jk,njki->nji", self.rule.points, jac)
        out = np.einsum("j,nji->ni", self.rule.weights, radial) / FOUR_PI
        return out[0] if np.ndim(r) == 0 else out

    def fluctuation(self, r: float, omegas: np.ndarray | None = None) -> np.ndarray:
        """v(r w) on the given directions (defaults to the rule nodes)."""
        w = self.rule.points if omegas is None else np.asarray(omegas, dtype=float)
        return self.base.value(r * w) - self.mean(r)

    def fluctuation_jacobian(
        self, r: float, omegas: np.ndarray | None = None
    ) -> np.ndarray:
        """Dv at r w: the full jacobian minus the rank-one radial part."""
        w = self.rule.points if omegas is None else np.asarray(omegas, dtype=float)
        jac = self.base.jacobian(r * w)
        dbar = self.mean_derivative(r)
        return jac - w[:, :, None] * dbar[None, None, :]


def split(field, rule: SphereRule) -> SplitField:
    return SplitField(field, rule)


def orthogonality_check(f, df, g, grad_g, grid: PolarGrid) -> tuple[float, float]:
    """The two cross integrals that vanish for zero-mean g.

    Returns (int f(r) g(x) dx, int r^{-1} Df . Dg dx) for a radial scalar
    f (df its derivative) and a scalar field g whose spherical means all
    vanish.  Both should be zero up to quadrature noise; returning the
    raw values rather than asserting keeps the check usable as an oracle.
    """
    def first(r, w):
        return f(r) * g(r[:, None] * w)

    def second(r, w):
        grad = grad_g(r[:, None] * w)             # (p, 3)
        return df(r) * np.sum(w * grad, axis=-1) / r

    a = volume_integrate_polar(grid, first, singular_power=0)
    b = volume_integrate_polar(grid, second, singular_power=1)
    return a, b


def _shell_norms(sf: SplitField, r: float):
    w = sf.rule.weights
    v = sf.fluctuation(r)                          # (m, 3)
    jv = sf.fluctuation_jacobian(r)                # (m, 3, 3)
    nv2 = float(np.sum(w * np.sum(v * v, axis=-1)))
    njv2 = float(np.sum(w * np.sum(jv * jv, axis=(-2, -1))))
    div = np.einsum("mkk->m", jv)
    ndiv2 = float(np.sum(w * div * div))
    return nv2, njv2, ndiv2


def poincare_sphere_check(sf: SplitField, r: float) -> tuple[float, float]:
    """(|v|_w^2, (r^2/2) |Dv|_w^2) at radius r; first <= second."""
    nv2, njv2, _ = _shell_norms(sf, r)
    return nv2, 0.5 * r * r * njv2


def div_bound_check(sf: SplitField, r: float) -> tuple[float, float]:
    """(|div v|_w^2, 3 |Dv|_w^2) at radius r; first <= second."""
    _, njv2, ndiv2 = _shell_norms(sf, r)
    return ndiv2, 3.0 * njv2
