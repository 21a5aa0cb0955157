"""Seeded GAP generators and the method-vs-method benchmark harness."""
from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import RunConfig, RunResult, run
from .io import format_gap_instance, gap_problem, load_problem
from .model import SeparableMilp
from .trace import write_csv

COST_RANGE = (1, 20)
WEIGHT_RANGE = (1, 10)
CAPACITY_RATIO = 0.8


@dataclass(frozen=True)
class GapData:
    costs: np.ndarray
    weights: np.ndarray
    capacities: np.ndarray
    name: str = ""

    def problem(self) -> SeparableMilp:
        return gap_problem(self.costs, self.weights, self.capacities, self.name)

    def text(self) -> str:
        return format_gap_instance(self.costs, self.weights, self.capacities)


def random_gap(seed, machines: int, jobs: int, capacity_ratio: float = CAPACITY_RATIO,
               name: str = "") -> GapData:
    """Costs uniform on 1..20, weights on 1..10.

    Machine i gets ``floor(ratio * sum_j w_ij / machines)``: its share of the
    weight it would carry if it took every job.
    """
    rng = np.random.default_rng(seed)
    costs = rng.integers(COST_RANGE[0], COST_RANGE[1] + 1, size=(machines, jobs))
    weights = rng.integers(WEIGHT_RANGE[0], WEIGHT_RANGE[1] + 1, size=(machines, jobs))
    caps = np.floor(capacity_ratio * weights.sum(axis=1) / machines).astype(np.int64)
    return GapData(costs, weights, caps, name)


def gap_suite(seed: int, count: int, machines: int = 5, jobs: int = 15,
              capacity_ratio: float = CAPACITY_RATIO) -> list[GapData]:
    return [random_gap([seed, t], machines, jobs, capacity_ratio, name=f"gap{machines}x{jobs}-{seed}-{t}")
            for t in range(count)]


def write_suite(instances: list[GapData], out_dir) -> Path:
    """Write one ``.txt`` file per instance plus a ``suite.json`` listing them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in instances:
        fname = f"{inst.name}.txt"
        (out / fname).write_text(inst.text(), encoding="utf-8")
        entries.append({"path": fname, "format": "gap"})
    suite = out / "suite.json"
    suite.write_text(json.dumps({"instances": entries}, indent=1) + "\n", encoding="utf-8")
    return suite


def load_suite(path) -> tuple[list[tuple[str, SeparableMilp]], dict]:
    """Read a suite file (or a directory of instance files).

    A suite file is JSON: ``{"instances": [{"path": ..., "format": ...}], "config": {...}}``
    with paths relative to the file.  A ``"generate": {"seed", "count", "machines",
    "jobs"}`` entry adds seeded random GAP instances.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix in (".txt", ".json") and p.name != "suite.json")
        return [(p.stem, load_problem(str(p))) for p in files], {}
    doc = json.loads(path.read_text(encoding="utf-8"))
    out = []
    for entry in doc.get("instances", []):
        p = path.parent / entry["path"]
        out.append((entry.get("name", p.stem), load_problem(str(p), entry.get("format"))))
    gen = doc.get("generate")
    if gen is not None:
        for inst in gap_suite(int(gen.get("seed", 0)), int(gen.get("count", 1)),
                              int(gen.get("machines", 5)), int(gen.get("jobs", 15)),
                              float(gen.get("capacity_ratio", CAPACITY_RATIO))):
            out.append((inst.name, inst.problem()))
    return out, doc.get("config", {})


SUMMARY_FIELDS = ("instance", "method", "status", "iterations", "iterations_to_1pct",
                  "q_rec", "best_feasible_cost", "final_gap", "dual_gap", "detections",
                  "wall_ms", "error")


def iterations_to_gap(result: RunResult, target: float = 0.01) -> Optional[int]:
    """First iteration whose bound pair is within ``target`` relative gap."""
    for rec in result.trace.records:
        if rec.q_rec is None:
            continue
        ref = result.q_star if result.q_star is not None else rec.feasible_cost
        if ref is None:
            continue
        if (ref - rec.q_rec) / max(1.0, abs(ref)) <= target:
            return rec.k
    return None


def run_cell(name: str, problem: SeparableMilp, method: str, config: RunConfig,
             trace_dir: Optional[Path] = None) -> dict:
    row = dict.fromkeys(SUMMARY_FIELDS)
    row.update(instance=name, method=method)
    t0 = time.perf_counter()
    try:
        result = run(problem, method, config)
    except Exception as err:  # a failing cell must not sink the table
        row.update(status="failed", error=f"{type(err).__name__}: {err}")
        return row
    wall = (time.perf_counter() - t0) * 1000.0
    row.update(status=result.status, iterations=result.trace.summary["iterations"],
               iterations_to_1pct=iterations_to_gap(result), q_rec=result.q_rec,
               best_feasible_cost=result.best_feasible_cost, final_gap=result.final_gap,
               dual_gap=result.dual_gap, detections=len(result.detections),
               wall_ms=round(wall, 3) if config.record_wall_time else None, error="")
    if trace_dir is not None:
        with open(trace_dir / f"{name}.{method}.csv", "w", newline="", encoding="utf-8") as fh:
            write_csv(result.trace, fh)
    return row


def thread_count() -> int:
    raw = os.environ.get("LRKIT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def bench(instances, methods, config: Optional[RunConfig] = None, out_dir=None,
          threads: Optional[int] = None) -> list[dict]:
    """Run every (instance, method) cell and return summary rows in a fixed order."""
    config = config or RunConfig()
    trace_dir = None
    if out_dir is not None:
        trace_dir = Path(out_dir) / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
    cells = [(name, prob, m) for name, prob in instances for m in methods]
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: run_cell(*c, config, trace_dir), cells))
    else:
        rows = [run_cell(*c, config, trace_dir) for c in cells]
    if out_dir is not None:
        write_summary(rows, Path(out_dir) / "summary.csv")
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_summary(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in SUMMARY_FIELDS])


def format_table(rows) -> str:
    cols = ("instance", "method", "status", "iterations", "iterations_to_1pct", "final_gap")
    cells = [[_short(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c)
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _short(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def suite_config(**overrides) -> RunConfig:
    """Settings used for the synthetic GAP suite: periodic greedy repair and a 6000-step cap."""
    base = RunConfig(max_iter=6000, repair_interval=10)
    return dataclasses.replace(base, **overrides)
