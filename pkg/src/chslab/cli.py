"""Command-line entry point.

    chs-lab <experiment> [--lam 2 --n 3 ...] --seed S [--out PATH] [--format json|csv]
    chs-lab sweep <experiment> --axis NAME --values 1,2,3 [fixed params...]
    chs-lab acceptance

Flags can also come from a JSON config file (--config FILE); explicit flags
override file values. The environment variable CHS_LAB_PARALLELISM selects
how many sweep runs execute in parallel (all cores when unset).
"""

from __future__ import annotations

import argparse
import json
import sys

from .budgets import Budgets
from .reporting import format_float
from .runner import SCHEMAS, ExperimentConfig, run, sweep


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="64-bit seed; fixes all randomness")
    parser.add_argument("--trials", type=int, default=10_000, help="Monte-Carlo trial count")
    parser.add_argument("--out", type=str, default=None, help="report output path")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")
    parser.add_argument("--timing", action="store_true", help="print wall-clock duration")
    parser.add_argument("--max-dense-dim", type=int, default=None)
    parser.add_argument("--max-type-count", type=int, default=None)
    parser.add_argument("--max-subset-pairs", type=int, default=None)


def _add_schema_flags(parser: argparse.ArgumentParser, experiment: str) -> None:
    for name, (kind, default) in SCHEMAS[experiment].items():
        flag = f"--{name.replace('_', '-')}"
        parser.add_argument(flag, dest=name, type=kind, default=None, required=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chs-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for experiment in SCHEMAS:
        p = sub.add_parser(experiment, help=f"run the {experiment} experiment")
        _add_schema_flags(p, experiment)
        _add_common(p)
    p_sweep = sub.add_parser("sweep", help="run one experiment across a parameter axis")
    p_sweep.add_argument("experiment", choices=sorted(SCHEMAS))
    p_sweep.add_argument("--axis", required=True, help="parameter to sweep")
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    for name in sorted({n for schema in SCHEMAS.values() for n in schema}):
        p_sweep.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)
    _add_common(p_sweep)
    sub.add_parser("acceptance", help="run the full acceptance suite")
    return parser


def _merge_config_file(args: argparse.Namespace, names) -> dict:
    from_file = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            from_file = json.load(handle)
    params = {}
    for name in names:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            params[name] = flag_value
        elif name in from_file:
            params[name] = from_file[name]
    return params


def _budgets(args: argparse.Namespace) -> Budgets:
    overrides = {}
    if args.max_dense_dim is not None:
        overrides["max_dense_dim"] = args.max_dense_dim
    if args.max_type_count is not None:
        overrides["max_type_count"] = args.max_type_count
    if args.max_subset_pairs is not None:
        overrides["max_subset_pairs"] = args.max_subset_pairs
    return Budgets(**overrides) if overrides else Budgets()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "acceptance":
        from .acceptance import run_all

        results = run_all()
        return 0 if all(r.passed for r in results) else 1

    if args.command == "sweep":
        experiment = args.experiment
        params = _merge_config_file(args, SCHEMAS[experiment])
        axis_kind = SCHEMAS[experiment][args.axis][0]
        values = [axis_kind(v) for v in args.values.split(",") if v != ""]
        base = ExperimentConfig(
            experiment=experiment,
            params=params,
            seed=args.seed,
            trials=args.trials,
            output_path=args.out,
            format="csv",
            budgets=_budgets(args),
        )
        reports, table = sweep(base, args.axis, values)
        sys.stdout.write(table)
        return 0 if all(r.passed() for r in reports) else 1

    experiment = args.command
    params = _merge_config_file(args, SCHEMAS[experiment])
    config = ExperimentConfig(
        experiment=experiment,
        params=params,
        seed=args.seed,
        trials=args.trials,
        output_path=args.out,
        format=args.format,
        budgets=_budgets(args),
    )
    report = run(config)
    sys.stdout.write(report.to_json(include_timing=False))
    if args.timing:
        sys.stderr.write(f"wall clock: {format_float(report.duration_s)}s\n")
    return 0 if report.passed() else 1


if __name__ == "__main__":
    raise SystemExit(main())
