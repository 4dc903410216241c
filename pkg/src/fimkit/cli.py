"""Command-line entry point: simulate, analytic, compare, validate.

Exit status 0 on success, 1 when a validation check fails, 2 for usage or
configuration errors (argparse uses 2 as well).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import output, pipeline, tables, validation
from ._version import __version__
from .core import DomainError, as_hurst

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--model", default="fim", help="fbm, fim or dlp (default fim)")
    p.add_argument("--h", type=float, default=0.5, help="Hurst exponent in (0,1)")
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--floor", type=float, default=None,
                   help="EM volatility floor in position units (default depends on H)")
    p.add_argument("--no-bootstrap", action="store_true",
                   help="start EM at the origin instead of an exact draw at the first node")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (directory for several quantities)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fimkit", description="FBM / FIM / DLP simulation and checks")
    ap.add_argument("--version", action="version", version=f"fimkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="path ensembles as CSV or JSON")
    _common(s)
    s.add_argument("--scheme", default=None,
                   help="fbm: circulant|cholesky; fim: em|exact; dlp: em")

    a = sub.add_parser("analytic", help="closed-form quantities on grids")
    _common(a)
    a.add_argument("quantities", nargs="+", metavar="QUANTITY")
    a.add_argument("--x-max", type=float, default=4.0)
    a.add_argument("--points", type=int, default=201)
    a.add_argument("--t-points", type=int, default=1, help="time slices ending at --t-max")
    a.add_argument("--h-points", type=int, default=99)
    a.add_argument("--delta", type=float, default=0.25, help="increment length for incvar_*")

    c = sub.add_parser("compare", help="tail, divergence and property comparison report (JSON)")
    _common(c)
    c.add_argument("--tail-t", type=float, default=1.5, help="time at which tails are compared")

    v = sub.add_parser("validate", help="run the acceptance battery")
    _common(v)
    v.add_argument("--criteria", type=int, nargs="+", default=None, metavar="N",
                   help="subset of criteria 1-12 (default all)")
    return ap


def _write(path, data: bytes):
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as f:
        f.write(data)


def _sidecar(path, meta_bytes: bytes):
    if path is not None:
        _write(path + ".meta.json", meta_bytes)


def cmd_simulate(args) -> int:
    cfg = pipeline.RunConfig(
        model=args.model, h=args.h, t_max=args.t_max,
        steps=1024 if args.steps is None else args.steps,
        paths=100 if args.paths is None else args.paths,
        seed=0 if args.seed is None else args.seed,
        scheme=args.scheme, floor=args.floor, bootstrap=not args.no_bootstrap,
    )
    data, meta = pipeline.render(cfg, args.format)
    _write(args.out, data)
    _sidecar(args.out, meta)
    return EXIT_OK


def cmd_analytic(args) -> int:
    bad = [q for q in args.quantities if q not in tables.QUANTITIES]
    if bad:
        raise UsageError(f"unknown quantity {', '.join(bad)}; valid names: {', '.join(tables.QUANTITIES)}")
    g = tables.AnalyticGrid(h=args.h, t_max=args.t_max, x_max=args.x_max, points=args.points,
                            t_points=args.t_points, h_points=args.h_points, delta=args.delta)
    several = len(args.quantities) > 1
    if several and args.out is None:
        raise UsageError("several quantities need --out DIRECTORY")
    if several:
        os.makedirs(args.out, exist_ok=True)
    params = {"h": g.h, "t_max": g.t_max, "x_max": g.x_max, "points": g.points,
              "t_points": g.t_points, "h_points": g.h_points, "delta": g.delta}
    for q in args.quantities:
        cols, rows = tables.analytic_table(q, g)
        meta = {"schema_version": output.SCHEMA_VERSION, "library_version": __version__,
                "quantity": q, "parameters": params}
        if args.format == "csv":
            data = output.csv_bytes(cols, rows)
        else:
            data = output.json_bytes(dict(meta, columns=cols, rows=[list(r) for r in rows]))
        path = os.path.join(args.out, f"{q}.{args.format}") if several else args.out
        _write(path, data)
        if args.format == "csv":
            _sidecar(path, output.json_bytes(meta))
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.format != "json":
        raise UsageError("compare writes JSON only; use --format json")
    h = as_hurst(args.h)
    paths = 10**4 if args.paths is None else args.paths
    seed = 0 if args.seed is None else args.seed
    steps = 4 if args.steps is None else args.steps
    rep = tables.compare_report(h, paths, seed, tail_t=args.tail_t, steps=steps)
    rep = dict(rep, schema_version=output.SCHEMA_VERSION, library_version=__version__)
    _write(args.out, output.json_bytes(rep))
    return EXIT_OK


def cmd_validate(args) -> int:
    seed = validation.DEFAULT_SEED if args.seed is None else args.seed
    crit = args.criteria
    if crit is not None and any(c not in validation.CRITERIA for c in crit):
        raise UsageError("criteria must be numbers 1-12")
    checks = validation.run_checks(seed, crit)
    rep = validation.report(checks, seed)
    if args.format == "json":
        data = output.json_bytes(rep)
    else:
        data = output.csv_bytes(
            ["criterion", "name", "passed", "measured", "expected", "tolerance", "rule"],
            [(c.criterion, c.name, c.passed, c.measured, c.expected, c.tolerance, c.rule) for c in checks])
    _write(args.out, data)
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"FAILED criterion {c.criterion}: {c.name} (measured {c.measured!r}, "
              f"expected {c.expected!r}, tolerance {c.tolerance!r}, rule {c.rule})", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "analytic": cmd_analytic,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DomainError, UsageError) as exc:
        print(f"fimkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fimkit {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
