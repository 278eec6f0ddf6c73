"""Finite-difference Dirichlet problems on voxel domains and decay probes.

The discrete operator is the collocated 7-point Laplacian plus centered
grad-div,

    (A u)_i = (6 u_i - sum of axis shifts of u_i) / h^2
              - alpha * D_i^c ( sum_k D_k^c u_k ),

with zero extension outside the open voxel set.  Both pieces are
symmetric, and in Fourier variables the symbol is sum_j lambda_j |uhat|^2
+ alpha (s . uhat)^2 with s_j^2 <= lambda_j, so the operator stays
positive semidefinite for every alpha > -1 and plain conjugate gradient
applies.

Around a boundary point of interest (always the coordinate origin here)
the solution is summarized by the scale-indexed quantities

    m_rho   = rho^-3 int_{Omega cap S_rho} |u|^2,   S_rho = {rho < |x| < 2 rho}
    M_rho   = rho^-3 int_{Omega cap B_rho} |u|^2
    phi_rho = sup_{Omega cap B_rho} |u|^2
    psi_rho = int_{Omega cap B_rho} |Du|^2 / |x|

whose decay across dyadic rho, set against the capacity partial sums of
the same domain, is the empirical content of the boundary-regularity
criterion: when the Wiener sums diverge, log(phi + psi) should fall
linearly in the partial sum, and the fitted slope is the constant the
decay estimate calls c2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cg import conjugate_gradient, vcycle_preconditioner
from .elastic import ElasticParameter
from .errors import (
    DomainError,
    InsufficientLevelsError,
    ResolutionExceededError,
)
from .voxel import MaskGeometry, VoxelDomain, voxelize

__all__ = [
    "DirichletProblem",
    "SolutionGrid",
    "DecayReport",
    "DecayFit",
    "lame_grid_apply",
    "solve_dirichlet",
    "dyadic_probe",
    "modulus_profile",
    "caccioppoli_check",
    "poincare_capacity_check",
    "decay_vs_wiener",
]


def _sample_forcing(forcing, dom: VoxelDomain) -> np.ndarray:
    if isinstance(forcing, np.ndarray):
        if forcing.shape != dom.dims + (3,):
            raise DomainError(
                f"forcing array shape {forcing.shape} does not match "
                f"domain {dom.dims} + (3,)"
            )
        return forcing.astype(float)
    x, y, z = dom.center_grid()
    pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
    return np.asarray(forcing.value(pts), dtype=float)


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    """Forcing data for L u = f on a voxel domain, zero boundary values.

    The probe radius R declares the scale under examination: the forcing
    must vanish on B_{2R} so that u solves the homogeneous system near
    the origin and the decay machinery applies there.
    """

    domain: VoxelDomain
    param: ElasticParameter
    forcing: object            # field with value(), or (nx,ny,nz,3) array
    probe_radius: float

    def __post_init__(self):
        if self.probe_radius <= 0.0:
            raise DomainError(
                f"probe radius must be positive, got {self.probe_radius}"
            )
        f = _sample_forcing(self.forcing, self.domain)
        r = self.domain.radii()
        near = r <= 2.0 * self.probe_radius
        worst = float(np.max(np.abs(f[near]))) if near.any() else 0.0
        if worst > 0.0:
            raise DomainError(
                f"forcing reaches {worst:.3e} inside B_{{2R}} "
                f"(R = {self.probe_radius}); it must vanish there"
            )
        object.__setattr__(self, "_rhs", f)


def lame_grid_apply(
    u: np.ndarray, open_mask: np.ndarray, h: float, alpha: float
) -> np.ndarray:
    """The discrete operator with zero extension outside open voxels."""
    u = np.where(open_mask[..., None], u, 0.0)
    out = 6.0 * u
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out[tuple(hi)] -= u[tuple(lo)]
        out[tuple(lo)] -= u[tuple(hi)]
    out /= h * h

    if alpha != 0.0:
        div = np.zeros(u.shape[:3])
        for axis in range(3):
            comp = u[..., axis]
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            div[tuple(lo)] += comp[tuple(hi)]
            div[tuple(hi)] -= comp[tuple(lo)]
        div /= 2.0 * h
        for axis in range(3):
            grad = np.zeros_like(div)
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            grad[tuple(lo)] += div[tuple(hi)]
            grad[tuple(hi)] -= div[tuple(lo)]
            grad /= 2.0 * h
            out[..., axis] -= alpha * grad
    out[~open_mask] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class SolutionGrid:
    """Discrete solution with zero trace outside the open voxel set."""

    domain: VoxelDomain
    u: np.ndarray              # (nx, ny, nz, 3), zero off the open mask
    residual: float
    iterations: int

    @property
    def h(self) -> float:
        return self.domain.h


def solve_dirichlet(
    prob: DirichletProblem, tol: float = 1.0e-8
) -> SolutionGrid:
    """Conjugate-gradient solution of the masked discrete system."""
    dom = prob.domain
    mask = dom.open_mask
    rhs = np.where(mask[..., None], prob._rhs, 0.0)
    alpha = prob.param.alpha

    def apply_op(v):
        return lame_grid_apply(v, mask, dom.h, alpha)

    cap = 20 * max(dom.dims)
    u, rel, it = conjugate_gradient(
        apply_op,
        rhs,
        tol=tol,
        max_iter=cap,
        precondition=vcycle_preconditioner(~mask),
    )
    u = np.where(mask[..., None], u, 0.0)
    return SolutionGrid(dom, u, rel, it)


def _sample_solution(sol: SolutionGrid, pts: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of the voxel-centered solution at pts."""
    dom = sol.domain
    g = (pts - np.asarray(dom.origin)) / dom.h - 0.5
    base = np.floor(g).astype(int)
    for axis in range(3):
        np.clip(base[..., axis], 0, dom.dims[axis] - 2, out=base[..., axis])
    frac = np.clip(g - base, 0.0, 1.0)
    out = np.zeros(pts.shape[:-1] + (3,))
    for dx in (0, 1):
        wx = frac[..., 0] if dx else 1.0 - frac[..., 0]
        for dy in (0, 1):
            wy = frac[..., 1] if dy else 1.0 - frac[..., 1]
            for dz in (0, 1):
                wz = frac[..., 2] if dz else 1.0 - frac[..., 2]
                vals = sol.u[
                    base[..., 0] + dx, base[..., 1] + dy, base[..., 2] + dz
                ]
                out += (wx * wy * wz)[..., None] * vals
    return out


def _nested_solve(
    dom: VoxelDomain,
    param: ElasticParameter,
    forcing_grid: np.ndarray,
    parent: SolutionGrid,
    tol: float,
) -> SolutionGrid:
    """Local re-solve with boundary data interpolated from a parent grid.

    The outermost voxel layer of the subgrid carries the parent
    solution; the correction on the interior open voxels then solves
    the homogeneous-boundary system, and the sum is the refined local
    solution.
    """
    shell = np.ones(dom.dims, dtype=bool)
    shell[1:-1, 1:-1, 1:-1] = False
    bc_vox = shell & dom.open_mask
    interior = dom.open_mask & ~shell

    ubc = np.zeros(dom.dims + (3,))
    if bc_vox.any():
        x, y, z = dom.center_grid()
        pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)[bc_vox]
        ubc[bc_vox] = _sample_solution(parent, pts)

    carried = lame_grid_apply(ubc, dom.open_mask, dom.h, param.alpha)
    rhs = np.where(interior[..., None], forcing_grid - carried, 0.0)

    def apply_op(v):
        return lame_grid_apply(v, interior, dom.h, param.alpha)

    w, rel, it = conjugate_gradient(
        apply_op,
        rhs,
        tol=tol,
        max_iter=20 * max(dom.dims),
        precondition=vcycle_preconditioner(~interior),
    )
    u = np.where(interior[..., None], w, 0.0) + ubc
    return SolutionGrid(dom, u, rel, it)


def _gradient_energy_density(sol: SolutionGrid) -> np.ndarray:
    """|Du|^2 per voxel center by centered differences, zero-extended."""
    u = sol.u
    total = np.zeros(u.shape[:3])
    for axis in range(3):
        d = np.zeros_like(u)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        d[tuple(lo)] += u[tuple(hi)]
        d[tuple(hi)] -= u[tuple(lo)]
        d /= 2.0 * sol.h
        total += np.sum(d * d, axis=-1)
    return total


@dataclass(frozen=True)
class DecayReport:
    """Scale-indexed moduli of one solution near the origin."""

    radii: tuple[float, ...]
    m_rho: tuple[float, ...]
    big_m_rho: tuple[float, ...]
    phi_rho: tuple[float, ...]
    psi_rho: tuple[float, ...]
    wiener_partials: tuple[float, ...] | None = None


def modulus_profile(
    sol: SolutionGrid, radii, wiener_partials=None
) -> DecayReport:
    """Annulus masses, ball sups and weighted energies at given radii."""
    dom = sol.domain
    r = dom.radii()
    half_extent = 0.5 * min(
        n * dom.h for n in dom.dims
    )
    radii = tuple(float(rho) for rho in radii)
    for rho in radii:
        if rho <= 0.0 or rho > half_extent:
            raise DomainError(
                f"radius {rho} outside the grid extent {half_extent:.4g}"
            )
    mask = dom.open_mask
    sq = np.sum(sol.u**2, axis=-1)
    grad_sq = _gradient_energy_density(sol)
    h3 = dom.h**3
    weight = grad_sq / r                     # centers never sit at 0
    m_list, big_list, phi_list, psi_list = [], [], [], []
    for rho in radii:
        annulus = mask & (r > rho) & (r < 2.0 * rho)
        ball = mask & (r < rho)
        m_list.append(float(np.sum(sq[annulus])) * h3 / rho**3)
        big_list.append(float(np.sum(sq[ball])) * h3 / rho**3)
        phi_list.append(float(np.max(sq[ball])) if ball.any() else 0.0)
        psi_list.append(float(np.sum(weight[ball])) * h3)
    partials = None
    if wiener_partials is not None:
        partials = tuple(float(p) for p in wiener_partials)
        if len(partials) != len(radii):
            raise DomainError(
                f"{len(partials)} partial sums for {len(radii)} radii"
            )
    return DecayReport(
        radii, tuple(m_list), tuple(big_list), tuple(phi_list),
        tuple(psi_list), partials,
    )


def dyadic_probe(
    geom,
    param: ElasticParameter,
    forcing,
    probe_radius: float,
    levels: int,
    n: int = 128,
    tol: float = 1.0e-10,
    wiener_partials=None,
) -> DecayReport:
    """Decay moduli across dyadic radii with per-level grid refinement.

    Level j solves on a fresh n^3 box of half-extent 4 rho_j, so every
    probed radius is spanned by n/8 voxels no matter how small it gets.
    Level 0 is the global forced problem; each deeper level re-solves
    locally with boundary data interpolated from the level above (the
    forcing is resampled too, so the corner regions that still meet its
    support are driven correctly).  geom is an analytic geometry or a
    VoxelDomain (then limited by its native resolution).
    """
    from .capacity import _check_level_resolution

    if levels < 1:
        raise InsufficientLevelsError(f"need at least 1 level, got {levels}")
    geometry = MaskGeometry(geom) if isinstance(geom, VoxelDomain) else geom
    _check_level_resolution(geometry, probe_radius, levels)

    radii = [probe_radius * 0.5**j for j in range(levels)]
    m_list, big_list, phi_list, psi_list = [], [], [], []
    sol = None
    for j, rho in enumerate(radii):
        dom = voxelize(geometry, n, 4.0 * rho)
        if j == 0:
            prob = DirichletProblem(dom, param, forcing, probe_radius)
            sol = solve_dirichlet(prob, tol)
        else:
            fgrid = _sample_forcing(forcing, dom)
            sol = _nested_solve(dom, param, fgrid, sol, tol)
        rep = modulus_profile(sol, [rho])
        m_list.append(rep.m_rho[0])
        big_list.append(rep.big_m_rho[0])
        phi_list.append(rep.phi_rho[0])
        psi_list.append(rep.psi_rho[0])
    partials = None
    if wiener_partials is not None:
        partials = tuple(float(p) for p in wiener_partials)
        if len(partials) != levels:
            raise DomainError(
                f"{len(partials)} partial sums for {levels} levels"
            )
    return DecayReport(
        tuple(radii), tuple(m_list), tuple(big_list), tuple(phi_list),
        tuple(psi_list), partials,
    )


def caccioppoli_check(sol: SolutionGrid, rho: float) -> tuple[float, float]:
    """Annulus gradient energy against the larger-annulus mass.

    Returns (rho^-1 int_{Omega cap B_{5rho/3} minus B_{4rho/3}} |Du|^2,
    rho^-3 int_{Omega cap S_rho} |u|^2); for solutions of the
    homogeneous system on B_{2 rho} the first is bounded by an O(1)
    multiple of the second.
    """
    dom = sol.domain
    r = dom.radii()
    mask = dom.open_mask
    h3 = dom.h**3
    ann = mask & (r > 4.0 * rho / 3.0) & (r < 5.0 * rho / 3.0)
    s_rho = mask & (r > rho) & (r < 2.0 * rho)
    grad_sq = _gradient_energy_density(sol)
    sq = np.sum(sol.u**2, axis=-1)
    lhs = float(np.sum(grad_sq[ann])) * h3 / rho
    rhs = float(np.sum(sq[s_rho])) * h3 / rho**3
    return lhs, rhs


def poincare_capacity_check(
    sol: SolutionGrid, rho: float, cap_value: float
) -> tuple[float, float, str]:
    """m_rho * cap against the annulus gradient energy.

    Returns (m_rho * cap, int_{Omega cap S_rho} |Du|^2, status); the
    status is "skipped" when the capacity is numerically zero and the
    inequality is vacuous.
    """
    dom = sol.domain
    r = dom.radii()
    mask = dom.open_mask
    s_rho = mask & (r > rho) & (r < 2.0 * rho)
    sq = np.sum(sol.u**2, axis=-1)
    grad_sq = _gradient_energy_density(sol)
    h3 = dom.h**3
    m_rho = float(np.sum(sq[s_rho])) * h3 / rho**3
    energy = float(np.sum(grad_sq[s_rho])) * h3
    if cap_value < 1.0e-12:
        return 0.0, energy, "skipped"
    return m_rho * cap_value, energy, "checked"


@dataclass(frozen=True)
class DecayFit:
    c2: float
    intercept: float
    fit_residual: float
    status: str                # "fitted" or "no-decay-expected"


def decay_vs_wiener(report: DecayReport) -> DecayFit:
    """Least-squares slope of log(phi + psi) against -partial_sum."""
    if report.wiener_partials is None:
        raise InsufficientLevelsError("report carries no capacity partials")
    n = len(report.radii)
    if n < 4:
        raise InsufficientLevelsError(
            f"need at least 4 dyadic levels, got {n}"
        )
    w = np.asarray(report.wiener_partials)
    if float(np.max(w)) < 1.0e-6:
        return DecayFit(0.0, 0.0, 0.0, "no-decay-expected")
    vals = np.asarray(report.phi_rho) + np.asarray(report.psi_rho)
    if np.any(vals <= 0.0):
        raise DomainError("nonpositive phi + psi; nothing to fit")
    logs = np.log(vals)
    coeff, res = np.polynomial.polynomial.polyfit(
        -w, logs, 1, full=True
    )
    intercept, slope = float(coeff[0]), float(coeff[1])
    misfit = float(res[0][0]) if len(res[0]) else 0.0
    return DecayFit(slope, intercept, misfit, "fitted")
