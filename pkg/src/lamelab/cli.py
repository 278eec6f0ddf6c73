"""Command line front end emitting reproducible JSON and CSV artifacts.

Four subcommands map onto the library layers: region (positivity-region
roots), form (identity and coercivity checks on seeded random fields),
capacity (one voxel set or an analytic ball), probe (Dirichlet solve on
a voxel domain plus the decay-versus-capacity fit).

Every JSON document embeds the tool version, the fully resolved
configuration, and the tolerances in force, so a result file is
self-describing.  Outputs carry no timestamps and all floats print
through repr/17-significant-digit formatting: the same configuration
and seed produce byte-identical files.

Exit codes: 0 success, 1 a check failed (tolerance exceeded, bracket or
solver failure), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .capacity import capacity, wiener_profile
from .elastic import ElasticParameter
from .errors import (
    BracketFailureError,
    InvalidParameterError,
    NoConvergenceError,
)
from .fields import Bump, BumpField, random_field_spec
from .form import coercivity_check, identity_suite
from .probe import decay_vs_wiener, dyadic_probe
from .quadrature import default_polar_grid
from .region import region_report
from .voxel import read_voxdom

__all__ = ["main"]

_CHECK_FAILED = 1
_USAGE_ERROR = 2


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_h(text: str) -> float:
    """Grid spacings arrive as decimals or fractions like 1/64."""
    if "/" in text:
        num, den = text.split("/", 1)
        value = float(num) / float(den)
    else:
        value = float(text)
    if not value > 0.0:
        raise InvalidParameterError(f"spacing must be positive, got {text}")
    return value


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise InvalidParameterError(
                    f"{path}:{lineno}: expected key=value, got {body!r}"
                )
            key, value = body.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _thread_cap() -> int:
    raw = os.environ.get("LAMELAB_THREADS", "")
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InvalidParameterError(
            f"LAMELAB_THREADS must be an integer, got {raw!r}"
        ) from exc
    if cap < 1:
        raise InvalidParameterError("LAMELAB_THREADS must be at least 1")
    return cap


def _emit(text: str, out: str | None) -> None:
    """Write the whole artifact at once; partial files never appear."""
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lamelab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_doc(config: dict, tolerances: dict, result: dict) -> str:
    doc = {
        "version": __version__,
        "config": config,
        "tolerances": tolerances,
        "result": result,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _setting(args, file_cfg: dict[str, str], key: str, default, cast):
    """Flag wins, then config file, then the default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_cfg:
        return cast(file_cfg[key])
    return default


def _cmd_region(args, file_cfg) -> int:
    tol = _setting(args, file_cfg, "tol", 1.0e-9, float)
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    rep = region_report(tol)
    config = {"command": "region", "tol": tol, "threads": _thread_cap()}
    result = {
        "alpha_minus": rep.alpha_minus,
        "alpha_plus": rep.alpha_plus,
        "alpha_minus_critical": rep.alpha_minus_critical,
        "alpha_plus_critical": rep.alpha_plus_critical,
        "alpha_minus_bracket": list(rep.alpha_minus_bracket),
        "alpha_plus_bracket": list(rep.alpha_plus_bracket),
        "critical_brackets": [list(b) for b in rep.critical_brackets],
        "bracket_widths": {
            "alpha_minus": rep.alpha_minus_bracket[1]
            - rep.alpha_minus_bracket[0],
            "alpha_plus": rep.alpha_plus_bracket[1]
            - rep.alpha_plus_bracket[0],
        },
        "ordered": rep.ordered(),
    }
    _emit(_json_doc(config, {"bisection": tol}, result), args.out)
    return 0


def _cmd_form(args, file_cfg) -> int:
    alpha = _setting(args, file_cfg, "alpha", 0.0, float)
    seeds = _setting(args, file_cfg, "seeds", 5, int)
    rtol = _setting(args, file_cfg, "tol", 1.0e-6, float)
    resolution = int(file_cfg.get("resolution", "1"))
    if seeds < 1:
        raise InvalidParameterError("seeds must be at least 1")
    if rtol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    if resolution < 1:
        raise InvalidParameterError("resolution must be at least 1")
    param = ElasticParameter(alpha)    # ellipticity gate before any work
    grid = default_polar_grid()
    if resolution > 1:
        grid = grid.refined(resolution)

    fields = [random_field_spec(seed).build() for seed in range(seeds)]
    reports = identity_suite(fields, [alpha], grid, rtol)
    coercivity = None
    if args.coercivity:
        coercivity = [coercivity_check(param, f, grid) for f in fields]

    config = {
        "command": "form",
        "alpha": alpha,
        "seeds": seeds,
        "tol": rtol,
        "resolution": resolution,
        "coercivity": bool(args.coercivity),
        "threads": _thread_cap(),
    }
    ok = all(r.passed for r in reports)
    if coercivity is not None:
        ok = ok and all(c.passed for c in coercivity)

    fmt = args.format or "csv"
    if fmt == "csv":
        header = ["seed", "alpha", "lhs", "point_term", "bstar",
                  "residual", "scale", "passed"]
        if coercivity is not None:
            header += ["ratio", "bound"]
        rows = []
        for seed, rep in enumerate(reports):
            row = [str(seed), _fmt(rep.alpha), _fmt(rep.lhs),
                   _fmt(rep.point_term), _fmt(rep.bstar),
                   _fmt(rep.residual), _fmt(rep.scale),
                   str(rep.passed).lower()]
            if coercivity is not None:
                row += [_fmt(coercivity[seed].ratio),
                        _fmt(coercivity[seed].bound)]
            rows.append(row)
        _emit(_csv(header, rows), args.out)
    else:
        result = {
            "reports": [
                {
                    "seed": seed,
                    "alpha": rep.alpha,
                    "lhs": rep.lhs,
                    "point_term": rep.point_term,
                    "bstar": rep.bstar,
                    "residual": rep.residual,
                    "scale": rep.scale,
                    "passed": rep.passed,
                }
                for seed, rep in enumerate(reports)
            ],
        }
        if coercivity is not None:
            result["coercivity"] = [
                {"seed": seed, "ratio": c.ratio, "bound": c.bound,
                 "lambda_min": c.lambda_min, "passed": c.passed}
                for seed, c in enumerate(coercivity)
            ]
        _emit(_json_doc(config, {"identity_rtol": rtol}, result), args.out)
    return 0 if ok else _CHECK_FAILED


def _ball_mask(rho: float, h: float):
    from .voxel import VoxelDomain

    if rho <= 0.0:
        raise InvalidParameterError("ball radius must be positive")
    # side 8*rho keeps the box at 4x the ball diameter, the margin the
    # capacity solver insists on before the monopole correction is trusted
    n = 2 * int(round(4.0 * rho / h))
    if n < 2:
        raise InvalidParameterError(
            f"spacing {h} cannot resolve a ball of radius {rho}"
        )
    half = 0.5 * n * h
    origin = (-half, -half, -half)
    dom = VoxelDomain((n, n, n), h, origin,
                      np.ones((n, n, n), dtype=bool))
    kmask = dom.radii() <= rho
    return kmask, dom


def _cmd_capacity(args, file_cfg) -> int:
    tol = _setting(args, file_cfg, "tol", 1.0e-8, float)
    h = _setting(args, file_cfg, "h", 1.0 / 64.0, _parse_h)
    ball = _setting(args, file_cfg, "ball", None, float)
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    if (ball is None) == (args.voxfile is None):
        raise InvalidParameterError(
            "exactly one of --ball or a voxdom file is required"
        )
    if ball is not None:
        kmask, dom = _ball_mask(ball, h)
        source = {"ball": ball, "h": h}
    else:
        dom = read_voxdom(args.voxfile)
        kmask = ~dom.open_mask
        source = {"voxfile": os.path.basename(args.voxfile), "h": dom.h}
    est = capacity(kmask, dom, tol=tol)
    config = {"command": "capacity", "tol": tol,
              "threads": _thread_cap(), **source}
    result = {
        "value": est.value,
        "raw_energy": est.raw_energy,
        "grid_level": est.grid_level,
        "residual": est.residual,
        "iterations": est.iterations,
        "voxels_in_set": int(np.count_nonzero(kmask)),
    }
    _emit(_json_doc(config, {"cg": tol}, result), args.out)
    return 0


def probe_forcing(scale: float) -> BumpField:
    """The canonical probe load: one lump toward a lower box corner.

    The probe radius is half the box scale, so B_{2R} is the whole
    inscribed ball and the forcing may only live toward the corners;
    the inner cutoff makes it exactly zero on B_{2R}.
    """
    c = 1.25 * scale / np.sqrt(3.0)
    return BumpField(
        [Bump(center=(c, c, -c), radius=0.12 * scale,
              amplitude=(0.4, -0.2, 1.0))],
        support_radius=1.7 * scale,
        inner_cutoff=scale,
    )


def _cmd_probe(args, file_cfg) -> int:
    alpha = _setting(args, file_cfg, "alpha", 0.5, float)
    levels = _setting(args, file_cfg, "levels", 4, int)
    tol = _setting(args, file_cfg, "tol", 1.0e-10, float)
    subgrid = int(file_cfg.get("n", "128"))
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    if subgrid < 16 or subgrid % 2:
        raise InvalidParameterError(
            f"subgrid dimension must be even and at least 16, got {subgrid}"
        )
    param = ElasticParameter(alpha)
    dom = read_voxdom(args.voxfile)

    scale = 0.5 * min(dom.dims) * dom.h    # half the shortest box side
    probe_radius = 0.5 * scale

    profile = wiener_profile(dom, probe_radius, levels, tol=min(tol, 1e-8))
    partials = profile.partial_sums()

    report = dyadic_probe(
        dom, param, probe_forcing(scale), probe_radius, levels,
        n=subgrid, tol=tol, wiener_partials=partials,
    )
    fit = decay_vs_wiener(report) if levels >= 4 else None

    config = {
        "command": "probe",
        "voxfile": os.path.basename(args.voxfile),
        "alpha": alpha,
        "levels": levels,
        "n": subgrid,
        "tol": tol,
        "probe_radius": probe_radius,
        "threads": _thread_cap(),
    }
    fmt = args.format or "json"
    if fmt == "csv":
        header = ["level", "rho", "m_rho", "big_m_rho", "phi_rho",
                  "psi_rho", "partial_sum"]
        rows = [
            [str(j), _fmt(report.radii[j]), _fmt(report.m_rho[j]),
             _fmt(report.big_m_rho[j]), _fmt(report.phi_rho[j]),
             _fmt(report.psi_rho[j]), _fmt(partials[j])]
            for j in range(levels)
        ]
        _emit(_csv(header, rows), args.out)
    else:
        result = {
            "radii": list(report.radii),
            "m_rho": list(report.m_rho),
            "big_m_rho": list(report.big_m_rho),
            "phi_rho": list(report.phi_rho),
            "psi_rho": list(report.psi_rho),
            "wiener_partials": list(partials),
            "fit": None if fit is None else {
                "c2": fit.c2,
                "intercept": fit.intercept,
                "fit_residual": fit.fit_residual,
                "status": fit.status,
            },
        }
        _emit(_json_doc(config, {"cg": tol}, result), args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamelab",
        description="numerical laboratory for weighted positivity and "
        "capacity-based boundary probes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default=None)

    p = sub.add_parser("region", help="positivity-region roots")
    common(p)

    p = sub.add_parser("form", help="identity and coercivity checks")
    common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--coercivity", action="store_true")

    p = sub.add_parser("capacity", help="harmonic capacity of a voxel set")
    common(p)
    p.add_argument("voxfile", nargs="?", default=None)
    p.add_argument("--ball", type=float, default=None)
    p.add_argument("--h", type=_parse_h, default=None)

    p = sub.add_parser("probe", help="Dirichlet solve and decay fit")
    common(p)
    p.add_argument("voxfile")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--levels", type=int, default=None)
    return parser


_DISPATCH = {
    "region": _cmd_region,
    "form": _cmd_form,
    "capacity": _cmd_capacity,
    "probe": _cmd_probe,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_cfg = _read_config_file(args.config) if args.config else {}
        return _DISPATCH[args.command](args, file_cfg)
    except (BracketFailureError, NoConvergenceError) as exc:
        print(f"lamelab: check failed: {exc}", file=sys.stderr)
        return _CHECK_FAILED
    except (ValueError, OSError) as exc:
        # covers parameter validation, domain/format, and file problems
        print(f"lamelab: {exc}", file=sys.stderr)
        return _USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
