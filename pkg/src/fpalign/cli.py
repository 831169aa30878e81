"""Command-line entry points.

Subcommands: kinetic, particles, macro, hydro-sweep, diagnose.
Exit codes: 0 all monitors pass, 2 monitor failure, 3 solver/guard error,
4 configuration error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import parse_config
from .errors import ConfigError, DensityDegeneracyError
from .scenarios import EXIT_CONFIG, EXIT_SOLVER, fmt, run_scenario, write_csv


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpalign",
                                 description="Kinetic alignment solvers and diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("kinetic", "particles", "macro", "hydro-sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON document")
        p.add_argument("--out", default=None, help="output directory")
        if name == "particles":
            p.add_argument("--seed", type=int, default=None, help="seed override")
        if name == "hydro-sweep":
            p.add_argument("--eps", default=None,
                           help="comma-separated epsilon list override")
    d = sub.add_parser("diagnose",
                       help="read a kinetic snapshot, emit one EntropyReport row")
    d.add_argument("--config", required=True,
                   help="kinetic scenario JSON (supplies sigma, kernel, mass)")
    d.add_argument("--snapshot", required=True, help="snapshot CSV (x,v,f)")
    d.add_argument("--out", default=None, help="optional output directory")
    return ap


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config(text, command)


def _diagnose(args) -> int:
    from .diagnostics import EntropyReport, report
    from .grids import make_grids
    from .kernels import KernelSpec, build_kernel, default_density_floor

    cfg = _load_config(args.config, "kinetic")
    data = np.loadtxt(args.snapshot, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError("snapshot must have columns x,v,f")
    xs = np.unique(data[:, 0])
    vs = np.unique(data[:, 1])
    nx, nv = xs.size, vs.size
    if nx * nv != data.shape[0]:
        raise ConfigError("snapshot is not a full x-by-v grid")
    dx = xs[1] - xs[0]
    dv = vs[1] - vs[0]
    grid = make_grids(nx * dx, nx, vs[-1] + dv / 2.0, nv)
    f = data[:, 2].reshape(nx, nv)
    kern = build_kernel(KernelSpec(**cfg["kernel"]), grid.x)
    margin_r = cfg["diagnostics"]["margin_r"] or kern.r0 / 2.0
    floor = default_density_floor(cfg["mass"], grid.x.length)
    rep = report(f, cfg["sigma"], cfg["init"]["ubar"], cfg["mass"], kern,
                 margin_r, grid, floor)
    print(",".join(EntropyReport.CSV_COLUMNS))
    print(",".join(fmt(v) for v in rep.csv_values()))
    if args.out:
        import os
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "diagnose.csv"),
                  EntropyReport.CSV_COLUMNS, [rep.csv_values()])
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "diagnose":
            return _diagnose(args)
        cfg = _load_config(args.config, args.command)
        out_dir = args.out or cfg.get("output_dir")
        if out_dir is None:
            raise ConfigError("no output directory: set output_dir or pass --out")
        seed = getattr(args, "seed", None)
        eps = getattr(args, "eps", None)
        if eps is not None:
            eps = [float(e) for e in eps.split(",")]
        return run_scenario(cfg, out_dir, seed_override=seed, eps_override=eps)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DensityDegeneracyError as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
