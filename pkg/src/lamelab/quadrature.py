"""Product quadrature on spheres and polar volume quadrature.

Sphere rules are Gauss-Legendre in cos(theta) tensored with the uniform
(periodic trapezoid) rule in the azimuth; such a product integrates every
spherical polynomial of degree <= min(2 n_polar - 1, n_azimuth - 1)
exactly.  Radial rules are composite Gauss-Legendre panels on [0, r_max];
all nodes are strictly positive, so integrands with r^{-p} (p <= 2)
singularities at the origin are evaluated only where the r^2 volume
Jacobian has already tamed them.

All reductions use numpy's pairwise summation over arrays in a fixed
deterministic order; repeated runs produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InvalidParameterError, NonCompactSupportError

__all__ = [
    "SphereRule",
    "RadialRule",
    "PolarGrid",
    "product_sphere_rule",
    "composite_radial_rule",
    "default_polar_grid",
    "sphere_integrate",
    "volume_integrate_polar",
    "spherical_mean",
]

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class SphereRule:
    """Nodes on the unit sphere with positive weights summing to 4 pi."""

    points: np.ndarray          # (m, 3)
    weights: np.ndarray         # (m,)
    exactness_degree: int

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class RadialRule:
    """Strictly positive nodes and weights on (0, r_max]."""

    nodes: np.ndarray           # (n,)
    weights: np.ndarray         # (n,)
    r_max: float
    exactness_degree: int


@dataclass(frozen=True)
class PolarGrid:
    """Tensor product of a radial rule and a sphere rule."""

    radial: RadialRule
    sphere: SphereRule

    @property
    def r_max(self) -> float:
        return self.radial.r_max

    def points(self) -> np.ndarray:
        """All quadrature points r_i * w_j, flattened to (n*m, 3)."""
        return (self.radial.nodes[:, None, None]
                * self.sphere.points[None, :, :]).reshape(-1, 3)

    def refined(self, factor: int = 2) -> "PolarGrid":
        """Same construction with every node count multiplied by factor."""
        meta = getattr(self, "_build", None)
        if meta is None:
            raise ValueError("grid was not built by the module constructors")
        n_polar, n_azimuth, n_panels, per_panel = meta
        return build_polar_grid(
            factor * n_polar, factor * n_azimuth,
            factor * n_panels, per_panel, self.r_max,
        )


def product_sphere_rule(n_polar: int = 32, n_azimuth: int = 64) -> SphereRule:
    """Gauss in cos(theta) x uniform azimuth; m = n_polar * n_azimuth nodes."""
    if n_polar < 1 or n_azimuth < 1:
        raise InvalidParameterError("node counts must be positive")
    t, wt = leggauss(n_polar)                      # t = cos(theta) on [-1, 1]
    phi = 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
    wphi = 2.0 * math.pi / n_azimuth
    sin_t = np.sqrt(1.0 - t**2)
    x = sin_t[:, None] * np.cos(phi)[None, :]
    y = sin_t[:, None] * np.sin(phi)[None, :]
    z = np.broadcast_to(t[:, None], x.shape)
    pts = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    w = np.broadcast_to(wt[:, None] * wphi, x.shape).reshape(-1).copy()
    return SphereRule(pts, w, min(2 * n_polar - 1, n_azimuth - 1))


def composite_radial_rule(
    n_panels: int = 16, nodes_per_panel: int = 8, r_max: float = 8.0
) -> RadialRule:
    if n_panels < 1 or nodes_per_panel < 1 or r_max <= 0.0:
        raise InvalidParameterError("panel counts and r_max must be positive")
    t, w = leggauss(nodes_per_panel)
    edges = np.linspace(0.0, r_max, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return RadialRule(nodes, weights, float(r_max), 2 * nodes_per_panel - 1)


def build_polar_grid(
    n_polar: int, n_azimuth: int, n_panels: int, nodes_per_panel: int,
    r_max: float,
) -> PolarGrid:
    grid = PolarGrid(
        composite_radial_rule(n_panels, nodes_per_panel, r_max),
        product_sphere_rule(n_polar, n_azimuth),
    )
    object.__setattr__(grid, "_build", (n_polar, n_azimuth, n_panels, nodes_per_panel))
    return grid


def default_polar_grid(r_max: float = 8.0) -> PolarGrid:
    """The workhorse grid: 32 x 64 sphere nodes, 16 x 8 radial nodes."""
    return build_polar_grid(32, 64, 16, 8, r_max)


def sphere_integrate(rule: SphereRule, f) -> float | np.ndarray:
    """Integrate f over the unit sphere; f maps (m, 3) points to (m, ...)."""
    vals = np.asarray(f(rule.points))
    w = rule.weights
    if vals.ndim > 1:
        w = w.reshape((len(rule),) + (1,) * (vals.ndim - 1))
    out = np.sum(w * vals, axis=0)
    return float(out) if out.ndim == 0 else out


def volume_integrate_polar(
    grid: PolarGrid,
    g,
    singular_power: int = 0,
    support_tol: float = 1.0e-9,
) -> float:
    """Integrate g over R^3 in polar form: sum w_r w_s g(r, w) r^2.

    g takes flat arrays (r of shape (p,), w of shape (p, 3)) and returns
    (p,) values of the integrand, which may blow up like r^{-singular_power}
    (at most 2) at the origin; nodes never touch r = 0, and the r^2
    Jacobian keeps the products bounded.  g must vanish at r_max: it is
    sampled on the outer sphere, and a maximum above support_tol raises
    NonCompactSupportError rather than silently truncating the integral.
    """
    if singular_power not in (0, 1, 2):
        raise InvalidParameterError("singular_power must be 0, 1 or 2")
    sph = grid.sphere
    rad = grid.radial
    edge = np.asarray(
        g(np.full(len(sph), rad.r_max), sph.points), dtype=float
    )
    worst = float(np.max(np.abs(edge)))
    if worst > support_tol:
        raise NonCompactSupportError(
            f"integrand reaches {worst:.3e} at r_max = {rad.r_max}"
        )
    nr, ns = rad.nodes.shape[0], len(sph)
    r_flat = np.repeat(rad.nodes, ns)
    w_flat = np.tile(sph.points, (nr, 1))
    vals = np.asarray(g(r_flat, w_flat), dtype=float).reshape(nr, ns)
    shell = np.sum(vals * sph.weights[None, :], axis=1)
    return float(np.sum(shell * rad.weights * rad.nodes**2))


def spherical_mean(rule: SphereRule, u, r: float):
    """Average of u over the sphere of radius r; at r = 0, u(0) itself."""
    if r < 0.0:
        raise InvalidParameterError("radius must be nonnegative")
    if r == 0.0:
        return np.asarray(u(np.zeros((1, 3))))[0]
    vals = np.asarray(u(r * rule.points))
    w = rule.weights
    if vals.ndim > 1:
        w = w.reshape((len(rule),) + (1,) * (vals.ndim - 1))
    return np.sum(w * vals, axis=0) / FOUR_PI
