"""Turning near-feasible relaxed solutions into feasible primal solutions.

Both procedures are constructions of this package: the greedy one targets
assignment-structured coupling (every job row ``sum_i x_ij = 1``), the
penalty one works on any problem by escalating absolute-value penalties.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dual import evaluate_dual
from .model import (EQ, FullSolution, KnapsackSet, SeparableMilp, SubsystemSolution,
                    check_feasible, primal_cost, subgradient)
from .oracles import PenaltyContext, penalized_objective, solve_penalized_with_value


class RepairFailed(RuntimeError):
    pass


@dataclass
class RepairReport:
    solution: FullSolution
    cost: float
    best_dual: Optional[float]
    subsystems_touched: int
    passes: int = 0

    @property
    def relative_gap(self) -> Optional[float]:
        if self.best_dual is None:
            return None
        return (self.cost - self.best_dual) / max(1.0, abs(self.cost))


@dataclass
class AssignmentShape:
    """Machine/job view of a generalized-assignment problem."""

    job_of: list       # job_of[i][v] -> coupling row of variable v on machine i
    var_of: list       # var_of[i][j] -> variable index on machine i, or None

    @property
    def n_jobs(self) -> int:
        return len(self.var_of[0]) if self.var_of else 0


def assignment_shape(problem: SeparableMilp) -> Optional[AssignmentShape]:
    if not all(s == EQ for s in problem.senses) or not np.all(problem.rhs == 1):
        return None
    job_of, var_of = [], []
    for sub in problem.subsystems:
        if not isinstance(sub.local_set, KnapsackSet) or sub.n_cont:
            return None
        A = sub.int_coupling
        if not np.all((A == 0) | (A == 1)) or not np.all(A.sum(axis=0) == 1):
            return None
        jobs = [int(np.argmax(A[:, v])) for v in range(sub.n_int)]
        if len(set(jobs)) != len(jobs):
            return None
        lookup = [None] * problem.m
        for v, j in enumerate(jobs):
            lookup[j] = v
        job_of.append(jobs)
        var_of.append(lookup)
    return AssignmentShape(job_of, var_of)


def repair_greedy(problem: SeparableMilp, relaxed: FullSolution,
                  best_dual: Optional[float] = None) -> RepairReport:
    """Fix over- and under-assigned jobs of an assignment-structured solution.

    Over-assigned jobs keep only their cheapest copy and overloaded machines
    drop their most expensive jobs until they fit.  Each unassigned job
    (heaviest first) goes to the machine with spare capacity and least cost;
    failing that, one job already on some machine is moved elsewhere to make
    room, choosing the cheapest such pair of moves.
    """
    shape = assignment_shape(problem)
    if shape is None:
        raise ValueError("greedy repair needs assignment-structured coupling rows")
    subs = problem.subsystems
    n_mach, n_jobs = len(subs), shape.n_jobs
    cost = np.full((n_mach, n_jobs), np.inf)
    weight = np.zeros((n_mach, n_jobs), dtype=np.int64)
    for i, sub in enumerate(subs):
        for v, j in enumerate(shape.job_of[i]):
            cost[i, j] = sub.int_cost[v]
            weight[i, j] = sub.local_set.weights[v]
    cap = np.array([sub.local_set.capacity for sub in subs], dtype=np.int64)
    on = [[i for i in range(n_mach) if shape.var_of[i][j] is not None
           and relaxed[i].x[shape.var_of[i][j]] > 0.5] for j in range(n_jobs)]

    where = [None] * n_jobs
    for j, machines in enumerate(on):
        if machines:
            where[j] = min(machines, key=lambda i: (cost[i, j], i))
    load = np.zeros(n_mach, dtype=np.int64)
    for j, i in enumerate(where):
        if i is not None:
            load[i] += weight[i, j]
    # an overloaded machine sheds its most expensive jobs, which then count as unassigned
    for i in np.flatnonzero(load > cap):
        mine = sorted((j for j in range(n_jobs) if where[j] == i),
                      key=lambda j: (-cost[i, j], -weight[i, j], j))
        for j in mine:
            if load[i] <= cap[i]:
                break
            where[j] = None
            load[i] -= weight[i, j]

    def fits(i, j, extra=0):
        return shape.var_of[i][j] is not None and load[i] - extra + weight[i, j] <= cap[i]

    def lightest(j):
        w = weight[np.isfinite(cost[:, j]), j]
        return int(w.min()) if len(w) else 0

    pending = sorted((j for j in range(n_jobs) if where[j] is None), key=lambda j: (-lightest(j), j))
    for j in pending:
        direct = [i for i in range(n_mach) if fits(i, j)]
        if direct:
            i = min(direct, key=lambda i: (cost[i, j], i))
            where[j] = i
            load[i] += weight[i, j]
            continue
        best = None
        for i in range(n_mach):
            if shape.var_of[i][j] is None:
                continue
            for k in range(n_jobs):
                if where[k] != i or not fits(i, j, extra=weight[i, k]):
                    continue
                for i2 in range(n_mach):
                    if i2 == i or not fits(i2, k):
                        continue
                    delta = cost[i, j] - cost[i, k] + cost[i2, k]
                    key = (delta, i, k, i2)
                    if best is None or key < best:
                        best = key
        if best is None:
            raise RepairFailed(f"no machine can take job {j}")
        _, i, k, i2 = best
        load[i] += weight[i, j] - weight[i, k]
        load[i2] += weight[i2, k]
        where[j], where[k] = i, i2

    parts = []
    touched = 0
    for i, sub in enumerate(subs):
        x = np.zeros(sub.n_int)
        for j in range(n_jobs):
            if where[j] == i:
                x[shape.var_of[i][j]] = 1.0
        part = SubsystemSolution(x)
        touched += part != relaxed[i]
        parts.append(part)
    sol = FullSolution(tuple(parts))
    report = check_feasible(problem, sol)
    if not report.feasible:
        raise RepairFailed(f"greedy repair produced an infeasible point: {report}")
    return RepairReport(sol, primal_cost(problem, sol), best_dual, int(touched))


def default_rho0(problem: SeparableMilp) -> float:
    costs = np.concatenate([np.concatenate([s.int_cost, s.cont_cost]) for s in problem.subsystems])
    rho0 = 0.1 * float(np.mean(np.abs(costs))) if len(costs) else 0.0
    return rho0 if rho0 > 0 else 0.1


def default_rho_schedule(problem: SeparableMilp) -> list[float]:
    rho0 = default_rho0(problem)
    return [rho0 * 2.0 ** t for t in range(11)]


def penalized_sweep(problem: SeparableMilp, lam, sol: FullSolution, rho: float,
                    max_passes: int = 50) -> tuple[FullSolution, int]:
    """Gauss-Seidel passes of penalized subproblem solves until nothing improves."""
    lam = np.asarray(lam, float)
    passes = 0
    for _ in range(max_passes):
        passes += 1
        changed = False
        for i, sub in enumerate(problem.subsystems):
            g = subgradient(problem, sol)
            ctx = PenaltyContext(rho, g - sub.usage(sol[i]))
            cand, value = solve_penalized_with_value(sub, lam, ctx)
            current = penalized_objective(sub, lam, ctx, sol[i])
            if value < current - 1e-12 * (1.0 + abs(current)):
                sol = sol.replace(i, cand)
                changed = True
        if not changed:
            break
    return sol, passes


def repair_via_penalty(problem: SeparableMilp, lam_best, rho_schedule=None,
                       best_dual: Optional[float] = None) -> RepairReport:
    """Escalate absolute-value penalties from the relaxed minimizer at ``lam_best``."""
    lam_best = np.asarray(lam_best, float)
    q, start = evaluate_dual(problem, lam_best)
    if best_dual is None:
        best_dual = q
    if check_feasible(problem, start).feasible:
        return RepairReport(start, primal_cost(problem, start), best_dual, 0, passes=0)
    schedule = default_rho_schedule(problem) if rho_schedule is None else list(rho_schedule)
    sol = start
    total = 0
    for rho in schedule:
        sol, passes = penalized_sweep(problem, lam_best, sol, rho)
        total += passes
        if check_feasible(problem, sol).feasible:
            touched = sum(a != b for a, b in zip(sol.parts, start.parts))
            return RepairReport(sol, primal_cost(problem, sol), best_dual, int(touched), passes=total)
    raise RepairFailed("penalty schedule exhausted without reaching feasibility")
