"""Command-line entry point.

Subcommands: run, compare, sweep, single-task. Exit codes: 0 success,
1 configuration error, 2 numerical abort. Per-run outputs are trace.csv,
result.json, and config.echo in the output directory; compare and sweep
each write one table file (compare.csv / sweep.csv).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError, NumericalAbort
from .metrics import trace_to_text


def _parse_seeds(text: str) -> list:
    """Accept '7', '1,2,5', or an inclusive range '1..10'."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError("range end before start")
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad seed list {text!r}: {exc}") from exc


def _load_config(path: str) -> harness.ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return harness.parse_config(text)


def _write_run_outputs(result: harness.RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trace.csv").write_text(trace_to_text(result.trace))
    (out_dir / "result.json").write_text(harness.result_to_json(result))
    (out_dir / "config.echo").write_text(harness.config_to_text(result.config))


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out_dir = Path(args.out if args.out else config.out_dir)
    result = harness.run_experiment(config)
    _write_run_outputs(result, out_dir)
    print(f"{config.balancer}: composite = {result.composite:.6f} -> {out_dir}")
    return 0


def _cmd_single_task(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out_dir = Path(args.out if args.out else config.out_dir)
    result = harness.run_single_task(config, args.task)
    _write_run_outputs(result, out_dir)
    task = result.task_results[0]
    print(f"single-task {task.name}: metric = {task.metric:.6f}, test loss = {task.test_loss:.6g}")
    return 0


def _cmd_compare(args) -> int:
    config = _load_config(args.config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ConfigError("--methods must name at least one balancer")
    variants = [dataclasses.replace(config, balancer=m, name=m) for m in methods]
    seeds = _parse_seeds(args.seeds)
    report = harness.compare(variants, seeds, normalized_spread=not args.no_spread)
    out_dir = Path(args.out if args.out else config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = report.to_table_text()
    (out_dir / "compare.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values {args.values!r}: {exc}") from exc
    seeds = _parse_seeds(args.seeds)
    report = harness.sweep(config, args.param, values, seeds)
    out_dir = Path(args.out if args.out else config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = report.to_table_text()
    (out_dir / "sweep.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlbal", description="Multi-task loss-balancing benchmark harness."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one configuration and write its outputs")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", default=None)
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare", help="compare balancers over seeds")
    cmp_p.add_argument("--config", required=True)
    cmp_p.add_argument("--methods", required=True, help="comma-separated balancer names")
    cmp_p.add_argument("--seeds", required=True, help="e.g. 1..10 or 1,2,3")
    cmp_p.add_argument("--out", default=None)
    cmp_p.add_argument(
        "--no-spread", action="store_true", help="skip single-task reference runs"
    )
    cmp_p.set_defaults(func=_cmd_compare)

    sweep_p = sub.add_parser("sweep", help="grid one balancer hyperparameter")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--param", required=True, choices=sorted(harness.SWEEPABLE))
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--seeds", default="1", help="e.g. 1..5 (default 1)")
    sweep_p.add_argument("--out", default=None)
    sweep_p.set_defaults(func=_cmd_sweep)

    st_p = sub.add_parser("single-task", help="train one task alone for reference losses")
    st_p.add_argument("--config", required=True)
    st_p.add_argument("--task", type=int, required=True)
    st_p.add_argument("--seed", type=int, default=None)
    st_p.add_argument("--out", default=None)
    st_p.set_defaults(func=_cmd_single_task)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        print(exc.balancer_snapshot, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
