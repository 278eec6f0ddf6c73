"""Shared oracles and fixtures.

Finite differences here are test instruments only; the library itself
always differentiates analytically.
"""

import subprocess
import sys

import numpy as np
import pytest


def fd_jacobian(field, x, h=1.0e-5):
    """Central-difference jacobian, layout (n, k, i) matching the library."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        out[..., k, :] = (field.value(x + e) - field.value(x - e)) / (2.0 * h)
    return out


def fd_hessians(field, x, h=1.0e-5):
    """Central differences of the analytic jacobian, layout (n, i, j, k)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3, 3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        dj = (field.jacobian(x + e) - field.jacobian(x - e)) / (2.0 * h)
        # dj[..., k, i] = D_j D_k u_i -> out[..., i, j, k]
        out[..., :, j, :] = np.swapaxes(dj, -1, -2)
    return out


class SumField:
    """Pointwise sum of two fields, for bilinearity checks."""

    def __init__(self, a, b, sign=1.0):
        self.a, self.b, self.sign = a, b, float(sign)
        self.support_radius = max(a.support_radius, b.support_radius)

    def value(self, x):
        return self.a.value(x) + self.sign * self.b.value(x)

    def jacobian(self, x):
        return self.a.jacobian(x) + self.sign * self.b.jacobian(x)

    def hessians(self, x):
        return self.a.hessians(x) + self.sign * self.b.hessians(x)


def run_cli(*args, env_extra=None):
    """Run the installed CLI in a subprocess; returns (code, stdout, stderr)."""
    import os

    env = dict(os.environ)
    env.setdefault("LAMELAB_THREADS", "1")
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "lamelab", *args],
        capture_output=True,
        text=True,
        env=env,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """Voxel fixture files shared across CLI and integration tests."""
    from lamelab.voxel import (
        ConeComplement,
        PointComplement,
        VoxelDomain,
        voxelize,
        write_voxdom,
    )

    d = tmp_path_factory.mktemp("voxfixtures")
    write_voxdom(voxelize(ConeComplement(), 32, 1.0), str(d / "cone32.vox"))
    write_voxdom(voxelize(PointComplement(), 32, 1.0), str(d / "point32.vox"))

    n, half = 32, 1.0
    h = 2.0 * half / n
    dom = VoxelDomain((n, n, n), h, (-half, -half, -half),
                      np.ones((n, n, n), dtype=bool))
    ball = VoxelDomain((n, n, n), h, (-half, -half, -half),
                       dom.radii() > 0.25)
    write_voxdom(ball, str(d / "ball32.vox"))
    return d
