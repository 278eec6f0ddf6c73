"""Core algebra for the 3D Lame operator and its fundamental matrix.

The operator acting on a displacement field u : R^3 -> R^3 is

    (Lu)_i = -D_k D_k u_i - alpha D_k D_i u_k        (summation over k),

strongly elliptic exactly for alpha > -1.  Its fundamental matrix is

    Phi_ij(x) = c_alpha |x|^{-1} (delta_ij + a w_i w_j),
    a = alpha / (alpha + 2),    w = x / |x|,

with the normalisation c_alpha = (alpha + 2) / (8 pi (alpha + 1)).  The
columns of Phi solve L(col) = 0 away from the pole, and the contracted
divergence D_i Phi_ij collapses to d_alpha |x|^{-2} w_j with
d_alpha = -2 c_alpha / (alpha + 2).

Index conventions used throughout the package:

* ``value(x)`` has shape (..., 3), component index i last.
* ``jacobian(x)`` has shape (..., 3, 3) with entry [k, i] = D_k u_i
  (derivative index first).
* ``hessians(x)`` has shape (..., 3, 3, 3) with entry [i, j, k]
  = D_j D_k u_i (component first, then the symmetric derivative pair).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EllipticityError, SingularPointError

__all__ = [
    "ElasticParameter",
    "constant_c_alpha",
    "constant_d_alpha",
    "fundamental_matrix",
    "fundamental_matrix_divergence",
    "lame_apply",
    "FundamentalColumnField",
]


@dataclass(frozen=True)
class ElasticParameter:
    """Validated Lame coupling constant.

    Raises EllipticityError for alpha <= -1, where the operator stops
    being strongly elliptic and the fundamental matrix normalisation
    1 / (alpha + 1) blows up.
    """

    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha <= -1.0:
            raise EllipticityError(
                f"alpha must be finite and > -1, got {self.alpha}"
            )

    @property
    def c_alpha(self) -> float:
        return (self.alpha + 2.0) / (8.0 * math.pi * (self.alpha + 1.0))

    @property
    def d_alpha(self) -> float:
        # equals -2 c_alpha / (alpha + 2); kept in closed form
        return -1.0 / (4.0 * math.pi * (self.alpha + 1.0))

    @property
    def anisotropy(self) -> float:
        """The ratio a = alpha / (alpha + 2) multiplying the dyadic part."""
        return self.alpha / (self.alpha + 2.0)


def constant_c_alpha(alpha: float) -> float:
    """Normalisation constant of the fundamental matrix."""
    return ElasticParameter(alpha).c_alpha


def constant_d_alpha(alpha: float) -> float:
    """Constant in D_i Phi_ij = d_alpha |x|^{-2} w_j."""
    return ElasticParameter(alpha).d_alpha


def _radial(x: np.ndarray, y: np.ndarray | None):
    x = np.asarray(x, dtype=float)
    d = x if y is None else x - np.asarray(y, dtype=float)
    r = np.sqrt(np.sum(d * d, axis=-1))
    if np.any(r == 0.0):
        raise SingularPointError("fundamental matrix evaluated at its pole")
    return d, r


def fundamental_matrix(
    param: ElasticParameter, x: np.ndarray, y: np.ndarray | None = None
) -> np.ndarray:
    """Fundamental matrix Phi(x - y), shape (..., 3, 3).

    ``x`` may carry leading batch axes; ``y`` defaults to the origin.
    Symmetric, homogeneous of degree -1, and positive definite with
    eigenvalues c_alpha/r and c_alpha (2 alpha + 2)/((alpha + 2) r).
    """
    d, r = _radial(x, y)
    w = d / r[..., None]
    eye = np.eye(3)
    dyad = w[..., :, None] * w[..., None, :]
    return (param.c_alpha / r)[..., None, None] * (eye + param.anisotropy * dyad)


def fundamental_matrix_divergence(
    param: ElasticParameter, x: np.ndarray, y: np.ndarray | None = None
) -> np.ndarray:
    """Row divergence D_i Phi_ij as a vector of shape (..., 3)."""
    d, r = _radial(x, y)
    w = d / r[..., None]
    return (param.d_alpha / (r * r))[..., None] * w


def lame_apply(field, x: np.ndarray, alpha: float) -> np.ndarray:
    """Apply L to a smooth field via its analytic second derivatives.

    (Lu)_i = -H[i, k, k] - alpha H[k, k, i]  with H from field.hessians.
    """
    ElasticParameter(alpha)
    hess = field.hessians(x)
    lap = np.einsum("...ikk->...i", hess)
    graddiv = np.einsum("...kki->...i", hess)
    return -(lap + alpha * graddiv)


class FundamentalColumnField:
    """Column j of Phi exposed through the displacement-field interface.

    Not compactly supported; it exists so that the fundamental-solution
    property L Phi(. , j) = 0 (x != 0) can be checked through exactly the
    same code path as every other field.
    """

    def __init__(self, param: ElasticParameter, column: int):
        if column not in (0, 1, 2):
            raise ValueError("column must be 0, 1 or 2")
        self.param = param
        self.column = column
        self.support_radius = math.inf

    def value(self, x: np.ndarray) -> np.ndarray:
        return fundamental_matrix(self.param, x)[..., :, self.column]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        d, r = _radial(x, None)
        c, a, j = self.param.c_alpha, self.param.anisotropy, self.column
        r3 = r**3
        r5 = r**5
        xj = d[..., j]
        # D_k u_i, layout (..., k, i)
        out = np.zeros(d.shape[:-1] + (3, 3))
        for k in range(3):
            for i in range(3):
                t = -(1.0 if i == j else 0.0) * d[..., k] / r3
                t = t + a * (
                    ((1.0 if k == i else 0.0) * xj
                     + (1.0 if k == j else 0.0) * d[..., i]) / r3
                    - 3.0 * d[..., i] * xj * d[..., k] / r5
                )
                out[..., k, i] = t
        return c * out

    def hessians(self, x: np.ndarray) -> np.ndarray:
        d, r = _radial(x, None)
        c, a, j = self.param.c_alpha, self.param.anisotropy, self.column
        r3, r5, r7 = r**3, r**5, r**7
        xj = d[..., j]
        out = np.zeros(d.shape[:-1] + (3, 3, 3))
        for i in range(3):
            dij = 1.0 if i == j else 0.0
            for l in range(3):
                for k in range(3):
                    # D_l D_k (1/r)
                    f2 = -(1.0 if k == l else 0.0) / r3 + 3.0 * d[..., k] * d[..., l] / r5
                    # D_l D_k (x_i x_j / r^3)
                    g2 = ((1.0 if k == i else 0.0) * (1.0 if l == j else 0.0)
                          + (1.0 if k == j else 0.0) * (1.0 if l == i else 0.0)) / r3
                    g2 = g2 - 3.0 * (
                        (1.0 if k == i else 0.0) * xj
                        + (1.0 if k == j else 0.0) * d[..., i]
                    ) * d[..., l] / r5
                    g2 = g2 - 3.0 * (
                        ((1.0 if l == i else 0.0) * xj
                         + (1.0 if l == j else 0.0) * d[..., i]) * d[..., k]
                        + d[..., i] * xj * (1.0 if l == k else 0.0)
                    ) / r5
                    g2 = g2 + 15.0 * d[..., i] * xj * d[..., k] * d[..., l] / r7
                    out[..., i, l, k] = dij * f2 + a * g2
        return c * out
