"""Voxelized open sets and the "voxdom v1" mask file format.

A VoxelDomain samples an open set Omega on a regular grid: open_mask is
True at voxels whose centers lie in Omega.  Voxel (ix, iy, iz) has its
center at origin + h * (ix + 1/2, iy + 1/2, iz + 1/2); boxes built by
voxelize are centered on the coordinate origin with even dims, so no
voxel center ever sits exactly at 0 and 1/|x| weights stay finite.

The file format is deliberately dumb: four ASCII header lines

    voxdom v1
    dims nx ny nz
    spacing h
    origin ox oy oz

followed by nx*ny*nz characters '0'/'1' in x-fastest row-major order
with a newline every nx characters (so line iy + ny*iz holds the x-run
of that column pair).  Anything else raises DomainError naming the
offending line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "VoxelDomain",
    "HalfSpaceComplement",
    "ConeComplement",
    "PointComplement",
    "MaskGeometry",
    "voxelize",
    "read_voxdom",
    "write_voxdom",
]


@dataclass(frozen=True, eq=False)
class VoxelDomain:
    """Boolean sampling of an open set on a regular voxel grid."""

    dims: tuple[int, int, int]
    h: float
    origin: tuple[float, float, float]
    open_mask: np.ndarray       # (nx, ny, nz), True = center inside Omega

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(nx, ny, nz) < 1:
            raise DomainError(f"dims must be positive, got {self.dims}")
        if not self.h > 0.0:
            raise DomainError(f"spacing must be positive, got {self.h}")
        if self.open_mask.shape != (nx, ny, nz):
            raise DomainError(
                f"mask shape {self.open_mask.shape} does not match dims {self.dims}"
            )
        if self.open_mask.dtype != np.bool_:
            object.__setattr__(self, "open_mask",
                               self.open_mask.astype(bool))

    def axis_centers(self, axis: int) -> np.ndarray:
        """Voxel-center coordinates along one axis."""
        n = self.dims[axis]
        return self.origin[axis] + self.h * (np.arange(n) + 0.5)

    def center_grid(self):
        """Meshgrid-ready (x, y, z) center coordinate arrays (open form)."""
        x = self.axis_centers(0)[:, None, None]
        y = self.axis_centers(1)[None, :, None]
        z = self.axis_centers(2)[None, None, :]
        return x, y, z

    def radii(self) -> np.ndarray:
        """Distance from the coordinate origin to every voxel center."""
        x, y, z = self.center_grid()
        return np.sqrt(x * x + y * y + z * z)

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Nearest-voxel indices of points, clipped to the grid."""
        pts = np.asarray(points, dtype=float)
        rel = (pts - np.asarray(self.origin)) / self.h - 0.5
        idx = np.rint(rel).astype(int)
        return np.clip(idx, 0, np.asarray(self.dims) - 1)


class HalfSpaceComplement:
    """Omega = {x1 > 0}; the complement is the closed half-space x1 <= 0."""

    native_h = None

    def inside(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float)[..., 0] > 0.0


class ConeComplement:
    """Omega is everything below the solid cone x3 >= slope * |(x1, x2)|.

    The complement is a solid cone with vertex at the coordinate origin,
    so the origin is a boundary point with fat complement at every scale.
    """

    native_h = None

    def __init__(self, slope: float = 1.0):
        if slope <= 0.0:
            raise DomainError(f"cone slope must be positive, got {slope}")
        self.slope = float(slope)

    def inside(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        r_xy = np.sqrt(p[..., 0] ** 2 + p[..., 1] ** 2)
        return p[..., 2] < self.slope * r_xy


class PointComplement:
    """Omega = R^3 minus the origin alone.

    Voxel centers never coincide with the origin on the centered even
    grids used here, so every sampled voxel is inside and the complement
    has zero capacity at any grid scale.
    """

    native_h = None

    def inside(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.any(p != 0.0, axis=-1)


class MaskGeometry:
    """Geometry backed by a stored VoxelDomain, nearest-voxel sampled.

    Points outside the stored box are treated as inside Omega; only the
    neighborhood of the origin matters for capacity profiles and the
    stored box is required to cover it.
    """

    def __init__(self, dom: VoxelDomain):
        self.dom = dom
        self.native_h = dom.h
        self._lo = np.asarray(dom.origin)
        self._hi = self._lo + dom.h * np.asarray(dom.dims)

    def inside(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        idx = self.dom.index_of(pts)
        vals = self.dom.open_mask[idx[..., 0], idx[..., 1], idx[..., 2]]
        outside_box = np.any((pts < self._lo) | (pts >= self._hi), axis=-1)
        return vals | outside_box


def voxelize(geom, n: int, half_extent: float) -> VoxelDomain:
    """Sample a geometry on a centered n^3 grid covering [-L, L]^3."""
    if n < 2 or n % 2:
        raise DomainError(f"grid dimension must be even and >= 2, got {n}")
    if half_extent <= 0.0:
        raise DomainError(f"half extent must be positive, got {half_extent}")
    h = 2.0 * half_extent / n
    origin = (-half_extent, -half_extent, -half_extent)
    dom = VoxelDomain((n, n, n), h, origin,
                      np.ones((n, n, n), dtype=bool))
    x, y, z = dom.center_grid()
    pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
    mask = geom.inside(pts)
    return VoxelDomain((n, n, n), h, origin, mask)


def write_voxdom(dom: VoxelDomain, path: str) -> None:
    """Serialize a domain in the voxdom v1 format."""
    nx, ny, nz = dom.dims
    ox, oy, oz = dom.origin
    header = (
        f"voxdom v1\n"
        f"dims {nx} {ny} {nz}\n"
        f"spacing {dom.h!r}\n"
        f"origin {ox!r} {oy!r} {oz!r}\n"
    )
    # '1'/'0' bytes in x-fastest order: transpose to (nz, ny, nx) rows
    digits = np.where(dom.open_mask.transpose(2, 1, 0), 49, 48).astype(np.uint8)
    rows = digits.reshape(nz * ny, nx)
    body = np.empty((nz * ny, nx + 1), dtype=np.uint8)
    body[:, :nx] = rows
    body[:, nx] = 10                     # newline
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(body.tobytes())


def _header_fields(line: str, lineno: int, keyword: str, count: int):
    parts = line.split()
    if len(parts) != count + 1 or parts[0] != keyword:
        raise DomainError(
            f"line {lineno}: expected '{keyword}' with {count} value(s), "
            f"got {line!r}"
        )
    return parts[1:]


def read_voxdom(path: str) -> VoxelDomain:
    """Parse a voxdom v1 file; malformed input raises DomainError."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise DomainError(f"not an ASCII file: {exc}") from None
    lines = text.split("\n")
    if len(lines) < 5:
        raise DomainError("file truncated before the mask body")
    if lines[0].strip() != "voxdom v1":
        raise DomainError(f"line 1: bad magic {lines[0]!r}")
    try:
        nx, ny, nz = (int(v) for v in _header_fields(lines[1], 2, "dims", 3))
    except ValueError:
        raise DomainError(f"line 2: dims must be integers, got {lines[1]!r}")
    if min(nx, ny, nz) < 1:
        raise DomainError(f"line 2: dims must be positive, got {lines[1]!r}")
    try:
        h = float(_header_fields(lines[2], 3, "spacing", 1)[0])
    except ValueError:
        raise DomainError(f"line 3: spacing must be a number, got {lines[2]!r}")
    try:
        origin = tuple(
            float(v) for v in _header_fields(lines[3], 4, "origin", 3)
        )
    except ValueError:
        raise DomainError(f"line 4: origin must be numbers, got {lines[3]!r}")
    body = lines[4:]
    # tolerate a trailing newline at end of file
    if body and body[-1] == "":
        body = body[:-1]
    if len(body) != ny * nz:
        raise DomainError(
            f"expected {ny * nz} mask lines of {nx} chars, found {len(body)}"
        )
    flat = np.empty((nz * ny, nx), dtype=np.uint8)
    for k, row in enumerate(body):
        if len(row) != nx:
            raise DomainError(
                f"line {k + 5}: expected {nx} characters, got {len(row)}"
            )
        b = np.frombuffer(row.encode("ascii"), dtype=np.uint8)
        bad = (b != 48) & (b != 49)
        if np.any(bad):
            pos = int(np.argmax(bad))
            raise DomainError(
                f"line {k + 5}: invalid character {row[pos]!r} at column {pos + 1}"
            )
        flat[k] = b - 48
    mask = flat.reshape(nz, ny, nx).transpose(2, 1, 0).astype(bool)
    return VoxelDomain((nx, ny, nz), h, origin, mask)
