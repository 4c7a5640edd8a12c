"""Command-line entry points.

``bnt run --config <path>`` executes the repeated-split benchmark protocol
described by a key=value config file and writes the report (table and/or
CSV, plus metric figures) to the output directory. ``bnt metrics`` scores
a prediction file against a truth file.

Exit codes: 0 success, 1 configuration/input error, 2 at least one model
failed (the report is still written).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .data import DataError
from .experiment import ConfigError, emit_report, format_table, parse_config, run_experiment
from .metrics import compute_metrics


def _read_column(path: str) -> list[float]:
    """Numbers, one per line (a non-numeric first line is taken as a header)."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in lines if ln]
    if not lines:
        raise DataError(f"empty file: {path}")
    start = 0
    try:
        float(lines[0].split(",")[0])
    except ValueError:
        start = 1
    out = []
    for i, ln in enumerate(lines[start:], start=start + 1):
        cell = ln.split(",")[0]
        try:
            out.append(float(cell))
        except ValueError:
            raise DataError(f"{path}:{i}: not a number: {cell!r}") from None
    return out


def cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, base_seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        rows = run_experiment(cfg, jobs=args.jobs)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    formats = ["table", "csv"] if args.format == "both" else [args.format]
    for fmt in formats:
        for path in emit_report(rows, fmt, args.out):
            print(f"wrote {path}")
    if args.figures:
        from .figures import render_figures

        for path in render_figures(rows, args.out):
            print(f"wrote {path}")
    print()
    print(format_table(rows))
    if any(r.n_failed for r in rows):
        for r in rows:
            for oc in r.per_repeat:
                if oc.error:
                    print(f"FAILED {r.dataset}/{r.model} repeat {oc.repeat}: {oc.error}",
                          file=sys.stderr)
        return 2
    return 0


def cmd_metrics(args) -> int:
    try:
        truth = _read_column(args.truth)
        pred = _read_column(args.pred)
        if len(truth) != len(pred):
            raise DataError(
                f"length mismatch: {len(truth)} truth vs {len(pred)} predictions"
            )
        report = compute_metrics(truth, pred, d_used=args.d_used)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name in ("mae", "mape", "rmse", "r2", "adj_r2"):
        print(f"{name} = {getattr(report, name)!r}")
    print(f"n = {report.n}")
    if report.mape_skipped:
        print(f"mape_skipped = {report.mape_skipped}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark protocol from a config file")
    run.add_argument("--config", required=True, help="key=value config file")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--format", choices=("table", "csv", "both"), default="both")
    run.add_argument("--jobs", type=int, default=1, help="parallel (model, repeat) cells")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--no-figures", dest="figures", action="store_false",
                     help="skip rendering metric figures")
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="score predictions against truth")
    met.add_argument("--pred", required=True, help="CSV/text file of predictions")
    met.add_argument("--truth", required=True, help="CSV/text file of true responses")
    met.add_argument("--d-used", type=int, default=1,
                     help="predictor count for adjusted R2 (default 1)")
    met.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
