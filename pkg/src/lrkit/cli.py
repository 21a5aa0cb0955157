"""Command-line entry points: solve, oracle, bench and generate."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import bench as bench_mod
from .dual import DualUnbounded, compute_dual_optimum
from .engine import METHODS, ConfigError, RunConfig, exit_status, run
from .io import InstanceError, load_config, load_problem
from .oracles import EnumerationCapExceeded
from .trace import write_csv

USAGE_ERROR = 1


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _config(args, base: Optional[dict] = None) -> RunConfig:
    cfg = RunConfig.from_dict(base or {})
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    return cfg


def cmd_solve(args) -> int:
    problem = load_problem(args.instance, args.format)
    cfg = _config(args)
    if args.method:
        cfg = dataclasses.replace(cfg, method=args.method)
    if args.oracle:
        cfg = dataclasses.replace(cfg, use_oracle=True)
    if args.max_iter is not None:
        cfg = dataclasses.replace(cfg, max_iter=args.max_iter)
    result = run(problem, config=cfg)
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            write_csv(result.trace, fh)
    summary = dict(result.trace.summary)
    summary["lambda"] = result.lam
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=1, default=_jsonable) + "\n",
                                      encoding="utf-8")
    print(f"{result.status}: q_rec={summary['q_rec']} best_feasible={summary['best_feasible_cost']} "
          f"iterations={summary['iterations']}")
    return exit_status(result)


def cmd_oracle(args) -> int:
    problem = load_problem(args.instance, args.format)
    q_star, lam_hat = compute_dual_optimum(problem)
    if args.json:
        print(json.dumps({"q_star": q_star, "lambda_hat": [float(v) for v in lam_hat]}))
    else:
        print(f"q* = {q_star!r}")
        print("lambda_hat = " + " ".join(repr(float(v)) for v in lam_hat))
    return 0


def cmd_bench(args) -> int:
    instances, suite_cfg = bench_mod.load_suite(args.suite)
    if not instances:
        raise InstanceError(f"{args.suite}: suite has no instances")
    cfg = _config(args, suite_cfg)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    rows = bench_mod.bench(instances, methods, cfg, args.out)
    print(bench_mod.format_table(rows))
    return 0


def cmd_generate(args) -> int:
    insts = bench_mod.gap_suite(args.seed, args.count, args.machines, args.jobs)
    suite = bench_mod.write_suite(insts, args.out)
    print(suite)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrkit", description="Lagrangian relaxation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one dual method on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--format", choices=("gap", "json"))
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--trace", help="CSV trace output path")
    p.add_argument("--summary", help="JSON summary output path")
    p.add_argument("--oracle", action="store_true", help="compute q* by enumeration first")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="print the dual optimum of an enumerable instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--format", choices=("gap", "json"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run methods over a suite of instances")
    p.add_argument("--suite", required=True)
    p.add_argument("--methods", required=True, help="comma-separated method ids")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a seeded random GAP suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--machines", type=int, default=5)
    p.add_argument("--jobs", type=int, default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (OSError, InstanceError, ConfigError, EnumerationCapExceeded,
            json.JSONDecodeError) as err:
        print(f"lrkit {args.command}: {err}", file=sys.stderr)
        return USAGE_ERROR
    except DualUnbounded as err:
        print(f"lrkit {args.command}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
