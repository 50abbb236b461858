"""``twistorlab`` command line: analyze, scan-t and oracle subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, catalog
from . import report as rp
from .chart import DEFAULT_H
from .lambda2 import ZERO_TOL

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with its own code and a text message
        raise rp.ValidationFailure(message)


def _add_common(p: argparse.ArgumentParser, t_grid: bool) -> None:
    src = p.add_argument_group("metric source")
    src.add_argument("--manifold", choices=catalog.NAMES)
    src.add_argument("--metric-file")
    src.add_argument("--r", type=float)
    src.add_argument("--r1", type=float)
    src.add_argument("--r2", type=float)
    src.add_argument("--eps", type=float)
    src.add_argument("--orientation", choices=("standard", "reversed"), default="standard")
    t = p.add_argument_group("twistor parameter")
    t.add_argument("--t", type=float, action="append", help="repeatable")
    if t_grid:
        t.add_argument("--t-min", type=float)
        t.add_argument("--t-max", type=float)
        t.add_argument("--t-steps", type=int)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=ZERO_TOL)
    p.add_argument("--h", type=float, default=DEFAULT_H)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twistorlab", description="Curvature and twistor-space diagnostics for Riemannian 4-manifolds.")
    parser.add_argument("--version", action="version", version=f"twistorlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    a = sub.add_parser("analyze", help="per-point curvature, twistor and Chern diagnostics")
    _add_common(a, t_grid=True)
    a.add_argument("--no-blocks", action="store_true")
    a.add_argument("--no-twistor", action="store_true")
    a.add_argument("--no-chern", action="store_true")
    s = sub.add_parser("scan-t", help="defects on a grid of t values")
    _add_common(s, t_grid=True)
    o = sub.add_parser("oracle", help="finite-difference checks on the twistor chart")
    _add_common(o, t_grid=False)
    o.add_argument("--corrupt-frame", action="store_true", help=argparse.SUPPRESS)
    return parser


def t_values(args: argparse.Namespace) -> list[float]:
    grid = [getattr(args, k, None) for k in ("t_min", "t_max", "t_steps")]
    if any(v is not None for v in grid):
        if args.t is not None:
            raise rp.ValidationFailure("use either --t or --t-min/--t-max/--t-steps")
        if any(v is None for v in grid):
            raise rp.ValidationFailure("--t-min, --t-max and --t-steps go together")
        lo, hi, n = grid
        if n < 1 or not lo <= hi or (n == 1 and lo != hi):
            raise rp.ValidationFailure("bad t grid", t_min=lo, t_max=hi, t_steps=n)
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(v) for v in (args.t or [1.0])]


def config_from_args(args: argparse.Namespace) -> rp.RunConfig:
    params = {k: getattr(args, k) for k in ("r", "r1", "r2", "eps") if getattr(args, k) is not None}
    if args.manifold is None and args.metric_file is None:
        raise rp.ValidationFailure("give --manifold or --metric-file")
    analyses = ("blocks", "twistor", "chern")
    if args.command == "analyze":
        analyses = tuple(a for a in analyses if not getattr(args, f"no_{a}"))
    return rp.RunConfig(
        manifold=args.manifold,
        params=params,
        metric_file=args.metric_file,
        orientation=args.orientation,
        t_values=t_values(args),
        points=args.points,
        seed=args.seed,
        tol=args.tol,
        h=args.h,
        format=args.format,
        out=args.out,
        analyses=analyses,
        workers=args.workers,
        corrupt_frame=getattr(args, "corrupt_frame", False),
    )


RUNNERS = {"analyze": rp.run_analyze, "scan-t": rp.run_scan_t, "oracle": rp.run_oracle}


def _fail(kind: str, code: int, exc: Exception) -> int:
    err = {"schema": rp.SCHEMA, "error": kind, "message": str(exc), "exit_code": code}
    err |= getattr(exc, "detail", {})
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        result = RUNNERS[args.command](config)
    except rp.ValidationFailure as exc:
        return _fail("validation", EXIT_VALIDATION, exc)
    except rp.NumericalFailure as exc:
        return _fail("numerical", EXIT_NUMERICAL, exc)

    text = rp.encode(result, config.format)
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if result.get("passed") is False:
        failure = rp.NumericalFailure("oracle residuals failed", failed=result["failures"])
        return _fail("numerical", EXIT_NUMERICAL, failure)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
