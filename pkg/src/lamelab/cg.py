"""Conjugate gradient and a multigrid preconditioner for box stencils.

The operator is passed as a callable; arrays are treated as vectors via
elementwise products.  For grids that are large and even-dimensioned, a
geometric V-cycle on the 7-point Laplacian is available as a
preconditioner; it also serves the elastic operator, whose symbol
differs from the Laplacian's by a factor between 1 and 1 + alpha, so
the preconditioned spectrum stays clustered.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergenceError

__all__ = ["conjugate_gradient", "laplace_stencil", "vcycle_preconditioner"]

_COARSE_LIMIT = 48       # below this, the multigrid pyramid bottoms out


def laplace_stencil(y: np.ndarray, kmask: np.ndarray) -> np.ndarray:
    """6 y - axis shifts, zero beyond the box and on kmask rows."""
    z = 6.0 * y
    z[1:, :, :] -= y[:-1, :, :]
    z[:-1, :, :] -= y[1:, :, :]
    z[:, 1:, :] -= y[:, :-1, :]
    z[:, :-1, :] -= y[:, 1:, :]
    z[:, :, 1:] -= y[:, :, :-1]
    z[:, :, :-1] -= y[:, :, 1:]
    z[kmask] = 0.0
    return z


def _jacobi(y: np.ndarray, r: np.ndarray, kmask: np.ndarray, sweeps: int):
    # damped Jacobi on the constant-diagonal stencil, in place
    for _ in range(sweeps):
        upd = r - laplace_stencil(y, kmask)
        upd *= 0.8 / 6.0
        y += upd
        y[kmask] = 0.0


def _mask_pyramid(kmask: np.ndarray) -> list[np.ndarray]:
    masks = [kmask]
    while min(masks[-1].shape) >= 2 * _COARSE_LIMIT and all(
        d % 2 == 0 for d in masks[-1].shape
    ):
        m = masks[-1]
        nx, ny, nz = m.shape
        masks.append(
            m.reshape(nx // 2, 2, ny // 2, 2, nz // 2, 2).any(axis=(1, 3, 5))
        )
    return masks


def _vcycle(r: np.ndarray, masks: list[np.ndarray], level: int) -> np.ndarray:
    """One multigrid V-cycle for the stencil, used to precondition CG.

    Symmetry of the preconditioner rests on equal pre/post Jacobi
    counts, a fixed sweep count at the bottom, and restriction
    proportional to the transpose of the piecewise-constant
    prolongation (mean pooling against np.repeat).  The stencil is
    h-free, so a restricted residual picks up the factor 4 = (2h/h)^2.
    """
    kmask = masks[level]
    y = np.zeros_like(r)
    if level == len(masks) - 1:
        _jacobi(y, r, kmask, 40)
        return y
    _jacobi(y, r, kmask, 2)
    res = r - laplace_stencil(y, kmask)
    nx, ny, nz = res.shape
    coarse = 4.0 * res.reshape(
        nx // 2, 2, ny // 2, 2, nz // 2, 2
    ).mean(axis=(1, 3, 5))
    coarse[masks[level + 1]] = 0.0
    err = _vcycle(coarse, masks, level + 1)
    y += np.repeat(np.repeat(np.repeat(err, 2, 0), 2, 1), 2, 2)
    y[kmask] = 0.0
    _jacobi(y, r, kmask, 2)
    return y


def vcycle_preconditioner(kmask: np.ndarray):
    """V-cycle residual-to-error map for grids worth the machinery.

    Returns None when the grid is too small or oddly sized to coarsen,
    in which case callers fall back to plain CG.  For fields with a
    trailing component axis the cycle is applied component by
    component; the overall map stays symmetric positive definite
    because it is block diagonal.
    """
    masks = _mask_pyramid(kmask)
    if len(masks) < 2:
        return None

    def precondition(r):
        if r.ndim == 3:
            return _vcycle(r, masks, 0)
        out = np.empty_like(r)
        for c in range(r.shape[-1]):
            out[..., c] = _vcycle(np.ascontiguousarray(r[..., c]), masks, 0)
        return out

    return precondition


def conjugate_gradient(
    apply_op,
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1.0e-8,
    max_iter: int | None = None,
    raise_on_stall: bool = True,
    precondition=None,
):
    """Solve apply_op(x) = rhs for symmetric positive (semi)definite ops.

    Returns (x, relative_residual, iterations).  The relative residual
    is ||rhs - A x|| / ||rhs||; a zero rhs returns x0 (or zeros)
    immediately.  Raises NoConvergenceError if the cap is hit while the
    residual is still above tol, unless raise_on_stall is False.

    precondition, if given, maps a residual to an approximate error and
    must be a fixed symmetric positive definite linear operation (an
    iteration count that adapts to its input would silently break the
    search directions).  Convergence is still judged on the true
    residual.

    apply_op must hand back a freshly allocated array; the loop scales
    it in place.
    """
    rhs = np.asarray(rhs, dtype=float)
    norm_b = float(np.sqrt(np.sum(rhs * rhs)))
    if norm_b == 0.0:
        x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
        return x, 0.0, 0
    if max_iter is None:
        max_iter = 10 * max(rhs.shape) if rhs.ndim else 1000
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=float)
        r = rhs - apply_op(x)
    z = r if precondition is None else precondition(r)
    p = z.copy()
    rz = float(np.sum(r * z))
    rr = float(np.sum(r * r))
    scratch = np.empty_like(rhs)
    it = 0
    while np.sqrt(rr) > tol * norm_b and it < max_iter:
        ap = apply_op(p)
        pap = float(np.sum(p * ap))
        if pap <= 0.0:
            # semidefinite direction: nothing further to gain along p
            break
        alpha = rz / pap
        # in-place updates; the big grids are memory-bound
        np.multiply(p, alpha, out=scratch)
        x += scratch
        np.multiply(ap, alpha, out=ap)
        r -= ap
        rr = float(np.sum(r * r))
        z = r if precondition is None else precondition(r)
        rz_new = float(np.sum(r * z))
        np.multiply(p, rz_new / rz, out=p)
        p += z
        rz = rz_new
        it += 1
    rel = float(np.sqrt(rr)) / norm_b
    if rel > tol and raise_on_stall:
        raise NoConvergenceError(
            f"residual {rel:.3e} above tol {tol:.1e} after {it} iterations"
        )
    return x, rel, it
