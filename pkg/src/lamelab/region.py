"""Positivity region of the weighted quadratic form in alpha.

The weighted form, after splitting off spherical means and applying the
sphere Poincare and divergence bounds, is controlled shell by shell by a
small symmetric matrix acting on

    w = (|D_r ubar|_w, |Dv|_w, |div v|_w).

For alpha >= 0 the matrix is 3 x 3 (written B+ below); for -1 < alpha <= 0
a reduced 2 x 2 matrix B- appears because the div component can be folded
into the gradient bound.  Positive definiteness of the applicable matrix
certifies positivity of the form; the boundary of the region is located
by root isolation on the leading principal minors.

Separately, a pointwise necessary condition comes from evaluating the
symbol-level determinant

    d2(w; alpha) = 4 (alpha+1) (alpha+2 + alpha w1^2)^2
                   - alpha^4 w1^2 w2^2

whose negativity anywhere on the sphere rules positivity out.  On the
witness direction (2^{-1/2}, 2^{-1/2}, 0) it collapses to the quartic
q(alpha) = (alpha+1)(3 alpha+4)^2 - alpha^4/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailureError, InvalidParameterError

__all__ = [
    "b_plus",
    "b_minus",
    "minors",
    "minor_polynomials_plus",
    "minor_polynomials_minus",
    "positivity_interval",
    "necessary_q",
    "critical_roots",
    "d2_evaluate",
    "d2_minimum",
    "RegionReport",
    "region_report",
]

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)

# scan resolution for root isolation; fine enough to separate every sign
# change of the minor polynomials in the windows below
SCAN_STEP = 1.0e-3


def _bplus_entries(alpha):
    """The six distinct entries of B+ as broadcast-friendly arrays."""
    a = np.asarray(alpha, dtype=float)
    s = a + 2.0
    e11 = 1.0 + (a / 3.0) * (2.0 * a + 3.0) / s
    e12 = -a / (2.0 * SQRT3)
    e13 = -(a / (2.0 * SQRT3)) * (3.0 * a + 4.0) / s
    e22 = 1.0 - (1.0 / SQRT2) * a / s
    e23 = -(a / 2.0) * (a + 1.0 / SQRT2) / s
    e33 = a
    return e11, e12, e13, e22, e23, e33


def _bminus_entries(alpha):
    a = np.asarray(alpha, dtype=float)
    s = a + 2.0
    e11 = 1.0 + (a / 3.0) * (2.0 * a + 3.0) / s
    e12 = (a / 2.0) * (3.0 * a + 4.0) / s + a / (2.0 * SQRT3)
    e22 = 1.0 + 3.0 * a + (a / s) * (1.0 + (1.0 + SQRT3) / SQRT2 - SQRT3 * a)
    return e11, e12, e22


def b_plus(alpha: float) -> np.ndarray:
    """Shell matrix for alpha >= 0, acting on (|D_r ubar|, |Dv|, |div v|)."""
    if not math.isfinite(alpha) or alpha < 0.0:
        raise InvalidParameterError(f"b_plus needs alpha >= 0, got {alpha}")
    e11, e12, e13, e22, e23, e33 = (float(v) for v in _bplus_entries(alpha))
    return np.array([[e11, e12, e13], [e12, e22, e23], [e13, e23, e33]])


def b_minus(alpha: float) -> np.ndarray:
    """Reduced shell matrix for -1 < alpha <= 0."""
    if not math.isfinite(alpha) or not -1.0 < alpha <= 0.0:
        raise InvalidParameterError(f"b_minus needs -1 < alpha <= 0, got {alpha}")
    e11, e12, e22 = (float(v) for v in _bminus_entries(alpha))
    return np.array([[e11, e12], [e12, e22]])


def minors(m: np.ndarray) -> tuple[float, ...]:
    """Leading principal minors, evaluated by direct cofactor expansion."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n) or not np.allclose(m, m.T, atol=1e-12):
        raise InvalidParameterError("minors expects a symmetric square matrix")
    out = [float(m[0, 0])]
    if n >= 2:
        out.append(float(m[0, 0] * m[1, 1] - m[0, 1] ** 2))
    if n >= 3:
        det3 = (
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] ** 2)
            - m[0, 1] * (m[0, 1] * m[2, 2] - m[1, 2] * m[0, 2])
            + m[0, 2] * (m[0, 1] * m[1, 2] - m[1, 1] * m[0, 2])
        )
        out.append(float(det3))
    if n > 3:
        raise InvalidParameterError("only 2x2 and 3x3 matrices are used here")
    return tuple(out)


def minor_polynomials_plus(alpha):
    """Closed rational forms of the three leading minors of B+.

    Kept as an independent cross-check of the cofactor evaluation; the
    two routes agree to full precision and tests enforce that.
    """
    a = np.asarray(alpha, dtype=float)
    s = a + 2.0
    p1 = (2.0 * a**2 + 6.0 * a + 6.0) / (3.0 * s)
    p2 = -(
        a**4
        - 4.0 * (1.0 - SQRT2) * a**3
        - 12.0 * (3.0 - SQRT2) * a**2
        - 12.0 * (6.0 - SQRT2) * a
        - 48.0
    ) / (12.0 * s**2)
    p3 = -a * (
        6.0 * a**5
        + (23.0 + 3.0 * SQRT2) * a**4
        + (13.0 + 19.0 * SQRT2) * a**3
        - (77.0 - 38.0 * SQRT2) * a**2
        - (157.0 - 24.0 * SQRT2) * a
        - 96.0
    ) / (12.0 * s**3)
    return p1, p2, p3


def minor_polynomials_minus(alpha):
    """Closed rational forms of the two leading minors of B-."""
    a = np.asarray(alpha, dtype=float)
    s = a + 2.0
    p1 = (2.0 * a**2 + 6.0 * a + 6.0) / (3.0 * s)
    p2 = (
        -(2.0 + 7.0 * SQRT3) * a**4
        + 2.0 * (15.0 + SQRT2 - 11.0 * SQRT3 + SQRT6) * a**3
        + 2.0 * (57.0 + 3.0 * SQRT2 - 10.0 * SQRT3 + 3.0 * SQRT6) * a**2
        + 6.0 * (20.0 + SQRT2 + SQRT6) * a
        + 24.0
    ) / (6.0 * s**2)
    return p1, p2


def _det3_vec(alpha):
    e11, e12, e13, e22, e23, e33 = _bplus_entries(alpha)
    return (
        e11 * (e22 * e33 - e23**2)
        - e12 * (e12 * e33 - e23 * e13)
        + e13 * (e12 * e23 - e22 * e13)
    )


def _det2_minus_vec(alpha):
    e11, e12, e22 = _bminus_entries(alpha)
    return e11 * e22 - e12**2


def _isolate_roots(fn, lo: float, hi: float, tol: float, step: float = SCAN_STEP):
    """All sign-change roots of fn on (lo, hi], each refined by bisection."""
    grid = np.arange(lo + step, hi + 0.5 * step, step)
    vals = fn(grid)
    roots = []
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        a, b = float(grid[i]), float(grid[i + 1])
        fa = float(vals[i])
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = float(fn(np.array([m]))[0])
            if fm == 0.0:
                a = b = m
                break
            if fa * fm < 0.0:
                b = m
            else:
                a, fa = m, fm
        roots.append((0.5 * (a + b), a, b))
    exact = np.nonzero(vals == 0.0)[0]
    for i in exact:
        roots.append((float(grid[i]), float(grid[i]), float(grid[i])))
    roots.sort()
    return roots


def positivity_interval(tol: float = 1.0e-9) -> tuple[float, float]:
    """(alpha_minus, alpha_plus): the sharp endpoints certified by B-/B+.

    alpha_plus is the largest root of det B+ in (0, 50]; alpha_minus the
    smallest root of det B- in (-1, 0).  Raises BracketFailureError if a
    scan window contains no sign change.
    """
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    plus = _isolate_roots(_det3_vec, 0.0, 50.0, tol)
    minus = _isolate_roots(_det2_minus_vec, -1.0, 0.0, tol)
    if not plus or not minus:
        raise BracketFailureError("no sign change found for a minor determinant")
    return minus[0][0], plus[-1][0]


def necessary_q(alpha: float):
    """q(alpha) = (alpha+1)(3 alpha+4)^2 - alpha^4/4; any sign of alpha."""
    a = np.asarray(alpha, dtype=float)
    out = (a + 1.0) * (3.0 * a + 4.0) ** 2 - a**4 / 4.0
    return float(out) if out.ndim == 0 else out


def critical_roots(tol: float = 1.0e-9) -> tuple[float, float]:
    """The two real roots of q bracketing its positivity window."""
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    roots = _isolate_roots(necessary_q, -1.0, 50.0, tol)
    if len(roots) != 2:
        raise BracketFailureError(
            f"expected exactly two roots of q in (-1, 50], found {len(roots)}"
        )
    return roots[0][0], roots[1][0]


def d2_evaluate(omega: np.ndarray, alpha: float):
    """The symbol determinant d2 at unit directions omega, shape (..., 3)."""
    w = np.asarray(omega, dtype=float)
    w1sq = w[..., 0] ** 2
    w2sq = w[..., 1] ** 2
    return (4.0 * (alpha + 1.0) * (alpha + 2.0 + alpha * w1sq) ** 2
            - alpha**4 * w1sq * w2sq)


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    golden = math.pi * (3.0 - math.sqrt(5.0))
    phi = golden * i
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


# the direction on which d2 reduces to the quartic q; always sampled so
# that the grid minimum can never sit above q(alpha)
WITNESS_DIRECTION = (1.0 / SQRT2, 1.0 / SQRT2, 0.0)


def d2_minimum(alpha: float, n: int = 4096) -> float:
    """Minimum of d2 over a Fibonacci grid with the witness direction added."""
    if n < 16:
        raise InvalidParameterError("grid needs at least 16 points")
    pts = np.vstack([_fibonacci_sphere(n), np.array([WITNESS_DIRECTION])])
    return float(np.min(d2_evaluate(pts, alpha)))


@dataclass(frozen=True)
class RegionReport:
    """Certified interval, necessary-condition roots, and their brackets."""

    alpha_minus: float
    alpha_plus: float
    alpha_minus_bracket: tuple[float, float]
    alpha_plus_bracket: tuple[float, float]
    alpha_minus_critical: float
    alpha_plus_critical: float
    critical_brackets: tuple[tuple[float, float], tuple[float, float]]
    tol: float
    scan_step: float = SCAN_STEP

    def ordered(self) -> bool:
        return (self.alpha_minus_critical < self.alpha_minus < 0.0
                < self.alpha_plus < self.alpha_plus_critical)


def region_report(tol: float = 1.0e-9) -> RegionReport:
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    plus = _isolate_roots(_det3_vec, 0.0, 50.0, tol)
    minus = _isolate_roots(_det2_minus_vec, -1.0, 0.0, tol)
    if not plus or not minus:
        raise BracketFailureError("no sign change found for a minor determinant")
    crit = _isolate_roots(necessary_q, -1.0, 50.0, tol)
    if len(crit) != 2:
        raise BracketFailureError("expected two roots of the necessary quartic")
    am, am_lo, am_hi = minus[0]
    ap, ap_lo, ap_hi = plus[-1]
    return RegionReport(
        alpha_minus=am,
        alpha_plus=ap,
        alpha_minus_bracket=(am_lo, am_hi),
        alpha_plus_bracket=(ap_lo, ap_hi),
        alpha_minus_critical=crit[0][0],
        alpha_plus_critical=crit[1][0],
        critical_brackets=((crit[0][1], crit[0][2]), (crit[1][1], crit[1][2])),
        tol=tol,
    )
