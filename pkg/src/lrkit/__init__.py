"""Lagrangian relaxation toolkit for block-separable mixed-integer linear programs."""
from .dual import DualUnbounded, compute_dual_optimum, evaluate_dual
from .engine import METHODS, ConfigError, RunConfig, RunResult, exit_status, run
from .io import (InstanceError, dump_problem_json, gap_problem, load_problem,
                 parse_gap_instance, parse_problem_json)
from .model import (EQ, GE, LE, BoundedPolyhedron, FullSolution, KnapsackSet, SeparableMilp,
                    Subsystem, SubsystemSolution, check_feasible, primal_cost, subgradient)
from .repair import RepairFailed, repair_greedy, repair_via_penalty
from .trace import ConvergenceTrace, TraceRecord, read_csv, write_csv

__version__ = "0.1.0"

__all__ = [
    "DualUnbounded", "compute_dual_optimum", "evaluate_dual",
    "METHODS", "ConfigError", "RunConfig", "RunResult", "exit_status", "run",
    "InstanceError", "dump_problem_json", "gap_problem", "load_problem", "parse_gap_instance",
    "parse_problem_json",
    "EQ", "GE", "LE", "BoundedPolyhedron", "FullSolution", "KnapsackSet", "SeparableMilp",
    "Subsystem", "SubsystemSolution", "check_feasible", "primal_cost", "subgradient",
    "RepairFailed", "repair_greedy", "repair_via_penalty",
    "ConvergenceTrace", "TraceRecord", "read_csv", "write_csv",
]
