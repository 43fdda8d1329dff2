"""Command line entry point ``apmc-abc``.

Exit codes: 0 success, 1 configuration error, 2 budget exhausted on
``run``, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from ..core import DEFAULT_BUDGET, ContractViolation
from ..metrics import GridSpec
from ..models import get_model
from .plan import ALGORITHMS, ConfigurationError, ExperimentPlan, load_plan
from .runner import BUDGET_EXHAUSTED, export_exact_posterior, read_rows, read_traces, run_plan
from .summary import emit_summary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_IO = 3


def _assignment(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), yaml.safe_load(value)


def _common(p: argparse.ArgumentParser, out_default: Optional[str]) -> None:
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--workers", type=int, default=None, help="concurrent workers")
    p.add_argument("--budget", type=float, default=None, help="max simulations per run")
    p.add_argument("--out-dir", default=out_default, help="output directory")
    p.add_argument("--resume", action="store_true", help="skip runs already in results.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apmc-abc", description="ABC samplers and benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one algorithm with one config")
    p.add_argument("--model", default="toy")
    p.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--set", dest="settings", type=_assignment, action="append", default=[],
                   metavar="KEY=VALUE", help="config field, repeatable (values parsed as YAML)")
    p.add_argument("--replicates", type=int, default=1)
    _common(p, "results/run")

    p = sub.add_parser("sweep", help="run an experiment plan file")
    p.add_argument("plan", help="YAML plan file")
    _common(p, None)

    p = sub.add_parser("summary", help="summarise a results directory or results.csv")
    p.add_argument("results", help="results.csv or the directory holding it")
    p.add_argument("--out-dir", default=None, help="defaults to the results directory")
    p.add_argument("--no-charts", action="store_true")

    p = sub.add_parser("posterior", help="export the exact posterior on a grid")
    p.add_argument("--model", default="toy")
    p.add_argument("--bins", type=int, default=300)
    p.add_argument("--output", "-o", default=None, help="CSV file (default stdout)")

    p = sub.add_parser("trace", help="dump per-iteration records of a run")
    p.add_argument("out_dir", help="directory holding traces.jsonl")
    p.add_argument("--run-id", default=None, help="default: every run")
    return parser


def _run_plan(plan: ExperimentPlan, resume: bool, single: bool) -> int:
    rows = run_plan(plan, resume=resume)
    for row in rows:
        print(f"{row.run_id}\t{row.status}\tn_sims={row.n_sims}\teps={row.final_epsilon:.6g}\tl2={row.l2:.6g}")
    if single and any(r.status == BUDGET_EXHAUSTED for r in rows):
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_run(args) -> int:
    plan = ExperimentPlan(
        model=args.model, algorithm=args.algorithm, fixed=dict(args.settings),
        replicates=args.replicates, base_seed=0 if args.seed is None else args.seed,
        budget=DEFAULT_BUDGET if args.budget is None else _budget(args.budget),
        workers=1 if args.workers is None else args.workers, out_dir=args.out_dir,
    )
    return _run_plan(plan, args.resume, single=True)


def _budget(value: float) -> int:
    if value != int(value) or value < 1:
        raise ConfigurationError("--budget must be a positive whole number")
    return int(value)


def _cmd_sweep(args) -> int:
    overrides = {
        "base_seed": args.seed, "workers": args.workers, "out_dir": args.out_dir,
        "budget": None if args.budget is None else _budget(args.budget),
    }
    plan = load_plan(args.plan, overrides)
    return _run_plan(plan, args.resume, single=False)


def _cmd_summary(args) -> int:
    rows = read_rows(args.results)
    src = Path(args.results)
    out = Path(args.out_dir) if args.out_dir else (src if src.is_dir() else src.parent)
    cells = emit_summary(rows, out, charts=not args.no_charts)
    for c in cells:
        print(f"{c.algorithm}\tcell {c.cell}\tn_sims={c.n_sims[0]:.6g}+-{c.n_sims[1]:.3g}"
              f"\tl2={c.l2[0]:.4g}+-{c.l2[1]:.3g}")
    return EXIT_OK


def _cmd_posterior(args) -> int:
    entry = get_model(args.model)
    table = export_exact_posterior(GridSpec.for_prior(entry.prior, args.bins), args.model)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["center", "density"])
        writer.writerows((repr(float(c)), repr(float(d))) for c, d in table)
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def _cmd_trace(args) -> int:
    records = read_traces(args.out_dir, args.run_id)
    if not records:
        raise ConfigurationError(f"no trace records for run {args.run_id!r}")
    keys = list(dict.fromkeys(k for r in records for k in r))
    writer = csv.DictWriter(sys.stdout, keys, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "summary": _cmd_summary,
    "posterior": _cmd_posterior,
    "trace": _cmd_trace,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ContractViolation, KeyError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
