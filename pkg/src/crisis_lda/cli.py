"""``crisis-lda`` command line interface.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import CrisisLdaError, NumericalError, ValidationError
from .losses import MeasureId
from .pipeline import (
    StageError,
    fit_stage,
    ingest_workspace,
    lda_stage,
    load_config,
    losses_stage,
    report_stage,
    run_pipeline,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _measures(token: str):
    if token.strip().lower() == "all":
        return tuple(m.value for m in MeasureId)
    return tuple(MeasureId.parse(t).value for t in token.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")

    trend = argparse.ArgumentParser(add_help=False)
    trend.add_argument("--hp-lambda", type=float, help="HP smoothing (default 100; 6.25 is the Ravn-Uhlig annual value)")
    trend.add_argument("--anchor", choices=("observed", "filtered"))
    trend.add_argument("--history", choices=("full", "window"))
    trend.add_argument("--gaps", choices=("net", "positive-only"))
    trend.add_argument("--scale", choices=("pre-onset", "onset"),
                       help="GDP that loss fractions are expressed against")

    p = argparse.ArgumentParser(prog="crisis-lda", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="validate inputs into a workspace")
    s.add_argument("--gdp", required=True)
    s.add_argument("--crises", required=True)
    s.add_argument("--meta")
    s.add_argument("--twin-window-years", type=int)

    s = sub.add_parser("losses", parents=[common, trend], help="compute loss measures")
    s.add_argument("--workspace", required=True)
    s.add_argument("--measures", type=_measures, default=None, help="'all' or comma separated list")

    s = sub.add_parser("fit", parents=[common], help="fit frequency and severity models")
    s.add_argument("--losses", required=True)
    s.add_argument("--measure", type=MeasureId.parse, required=True)
    s.add_argument("--unit", choices=("usd", "fraction"))
    s.add_argument("--select", choices=("benchmark", "aic"))

    s = sub.add_parser("lda", parents=[common], help="simulate the aggregate loss distribution")
    s.add_argument("--fits", required=True)
    s.add_argument("--sims", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--oracle", choices=("none", "panjer"))
    s.add_argument("--quantile-method", choices=("nearest-rank", "interpolated"))

    s = sub.add_parser("report", parents=[common], help="write tables and plot data")
    s.add_argument("--workspace", required=True)
    s.add_argument("--world-gdp", type=float)
    s.add_argument("--svg", action="store_true", default=None)

    s = sub.add_parser("pipeline", parents=[common, trend], help="run every stage on a workspace")
    s.add_argument("--workspace", required=True)
    s.add_argument("--gdp", help="ingest these inputs first")
    s.add_argument("--crises")
    s.add_argument("--meta")
    s.add_argument("--sims", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--oracle", choices=("none", "panjer"))
    s.add_argument("--svg", action="store_true", default=None)
    return p


def _config(args):
    keys = ("seed", "hp_lambda", "anchor", "history", "gaps", "scale", "twin_window_years", "unit", "select",
            "sims", "workers", "oracle", "quantile_method", "world_gdp", "svg")
    overrides = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "measures", None):
        overrides["measures"] = args.measures
    return load_config(args.config, **overrides)


def _run(args) -> None:
    cfg = _config(args)
    if args.command == "ingest":
        if not args.out:
            raise ValidationError("ingest needs --out <workspace dir>")
        report = ingest_workspace(args.gdp, args.crises, args.out, args.meta, cfg.twin_window_years)
        print(json.dumps(report, indent=2, sort_keys=True))
    elif args.command == "losses":
        table = losses_stage(args.workspace, cfg, args.out)
        print(json.dumps(table.diagnostics(), indent=2, sort_keys=True))
    elif args.command == "fit":
        out = args.out or str(Path(args.losses).with_name(f"fits_{args.measure.value}.json"))
        doc = fit_stage(args.losses, args.measure, cfg, out)
        print(f"{args.measure.value}: severity {doc['severity']['selected']}, "
              f"frequency {doc['frequency']['selected']} -> {out}")
    elif args.command == "lda":
        out = args.out or str(Path(args.fits).with_name("lda.json"))
        doc = lda_stage(args.fits, cfg, out)
        print(json.dumps(doc["summary"], indent=2, sort_keys=True))
    elif args.command == "report":
        for path in report_stage(args.workspace, cfg, args.out):
            print(path)
    elif args.command == "pipeline":
        if args.gdp or args.crises:
            if not (args.gdp and args.crises):
                raise StageError("ingest", ValidationError("--gdp and --crises go together"))
            try:
                ingest_workspace(args.gdp, args.crises, args.workspace, args.meta, cfg.twin_window_years)
            except (CrisisLdaError, OSError) as exc:
                raise StageError("ingest", exc) from exc
        manifest = run_pipeline(args.workspace, cfg)
        print(f"manifest written; config hash {manifest['config_hash']}")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _run(args)
    except (CrisisLdaError, OSError, ValueError, KeyError) as exc:
        print(f"crisis-lda {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
