"""Exact subproblem oracles: knapsack DP, branch-and-bound, and brute-force enumeration.

Ties between optimal solutions are broken toward the lexicographically
smallest integer vector everywhere, so runs are reproducible.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (GE, LE, BoundedPolyhedron, KnapsackSet, Subsystem,
                    SubsystemSolution)
from .simplex import linprog

ENUM_CAP = 10 ** 6
NODE_LIMIT = 10 ** 6
INT_TOL = 1e-6


class InfeasibleSubproblem(ValueError):
    pass


class EnumerationCapExceeded(ValueError):
    pass


class NodeLimitExceeded(RuntimeError):
    pass


def _tie_tol(value: float) -> float:
    return 1e-9 * (1.0 + abs(value))


@dataclass(frozen=True)
class PenaltyContext:
    """Penalty weight and the coupling residual of every *other* subsystem."""

    rho: float
    residual_others: np.ndarray

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        object.__setattr__(self, "residual_others",
                           np.asarray(self.residual_others, dtype=float).reshape(-1))


# ---------------------------------------------------------------------------
# knapsack

def knapsack_dp(weights, profits, capacity: int) -> tuple[np.ndarray, float]:
    """0/1 knapsack maximizing profit; returns (selection mask, objective).

    Among optimal selections the lexicographically smallest 0/1 vector is
    returned, i.e. later items are preferred whenever an earlier one is optional.
    """
    w = np.asarray(weights, dtype=np.int64).reshape(-1)
    p = np.asarray(profits, dtype=float).reshape(-1)
    n = len(w)
    capacity = int(capacity)
    if capacity < 0 or np.any(w < 0):
        raise ValueError("weights and capacity must be non-negative")
    # best[i, c]: max profit from items i..n-1 within capacity c
    best = np.zeros((n + 1, capacity + 1))
    for i in range(n - 1, -1, -1):
        nxt = best[i + 1]
        row = nxt.copy()
        if p[i] > 0 and w[i] <= capacity:
            take = np.full(capacity + 1, -np.inf)
            take[w[i]:] = nxt[:capacity + 1 - w[i]] + p[i]
            np.maximum(row, take, out=row)
        best[i] = row
    sel = np.zeros(n, dtype=bool)
    c = capacity
    for i in range(n):
        if best[i + 1, c] >= best[i, c] - 1e-12 * (1.0 + abs(best[i, c])):
            continue
        sel[i] = True
        c -= w[i]
    return sel, float(p[sel].sum())


# ---------------------------------------------------------------------------
# branch and bound

def as_polyhedron(local_set) -> BoundedPolyhedron:
    if isinstance(local_set, BoundedPolyhedron):
        return local_set
    n = local_set.n_int
    return BoundedPolyhedron(matrix=local_set.weights.reshape(1, n).astype(float),
                             rhs=[float(local_set.capacity)], senses=(LE,),
                             int_lb=np.zeros(n), int_ub=np.ones(n))


@dataclass
class _L1Rows:
    int_part: np.ndarray
    cont_part: np.ndarray
    offset: np.ndarray
    rho: float


class _NodeLP:
    """LP relaxation over [x, y, t] for a given box on x."""

    def __init__(self, poly: BoundedPolyhedron, int_obj, cont_obj, l1: Optional[_L1Rows]):
        nx, ny = poly.n_int, poly.n_cont
        nt = 0 if l1 is None or l1.rho == 0 else len(l1.offset)
        self.nx, self.ny, self.nt = nx, ny, nt
        width = nx + ny + nt
        self.c = np.concatenate([int_obj, cont_obj, np.full(nt, l1.rho if nt else 0.0)])
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for row, rhs, sense in zip(poly.matrix, poly.rhs, poly.senses):
            full = np.concatenate([row, np.zeros(nt)])
            if sense == LE:
                ub_rows.append(full)
                ub_rhs.append(rhs)
            elif sense == GE:
                ub_rows.append(-full)
                ub_rhs.append(-rhs)
            else:
                eq_rows.append(full)
                eq_rhs.append(rhs)
        for r in range(nt):
            base = np.concatenate([l1.int_part[r], l1.cont_part[r], np.zeros(nt)])
            t = np.zeros(width)
            t[nx + ny + r] = 1.0
            ub_rows.append(base - t)
            ub_rhs.append(-l1.offset[r])
            ub_rows.append(-base - t)
            ub_rhs.append(l1.offset[r])
        self.A_ub = np.array(ub_rows).reshape(-1, width)
        self.b_ub = np.array(ub_rhs, dtype=float)
        self.A_eq = np.array(eq_rows).reshape(-1, width)
        self.b_eq = np.array(eq_rhs, dtype=float)
        self.tail_bounds = list(zip(poly.cont_lb, poly.cont_ub)) + [(0.0, None)] * nt

    def solve(self, lb, ub):
        bounds = list(zip(lb, ub)) + self.tail_bounds
        return linprog(self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, bounds)

    def evaluate(self, x):
        """Exact objective with x fixed; None when x admits no continuous completion."""
        res = self.solve(x, x)
        if not res.success:
            return None, None
        return res.fun, res.x[self.nx:self.nx + self.ny]


def _bb_search(lp: _NodeLP, lb, ub, cutoff=None, first=False, node_limit=NODE_LIMIT):
    """Best-first branch-and-bound.  Returns (x, y, objective) or None."""
    counter = itertools.count()
    incumbent = None  # (obj, x, y)
    root = lp.solve(lb, ub)
    if not root.success:
        return None
    heap = [(root.fun, next(counter), np.array(lb, float), np.array(ub, float), root.x)]
    nodes = 0
    while heap:
        bound, _, nlb, nub, sol = heapq.heappop(heap)
        limit = cutoff if incumbent is None else incumbent[0]
        if limit is not None and bound > limit + _tie_tol(limit):
            continue
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(f"branch-and-bound exceeded {node_limit} nodes")
        xs = sol[:lp.nx]
        frac = np.abs(xs - np.round(xs))
        if np.all(frac <= INT_TOL):
            x = np.round(xs)
            obj, y = lp.evaluate(x)
            if obj is None:
                continue
            if cutoff is not None and obj > cutoff + _tie_tol(cutoff):
                continue
            if first:
                return x, y, obj
            if (incumbent is None or obj < incumbent[0] - _tie_tol(incumbent[0])
                    or (obj <= incumbent[0] + _tie_tol(incumbent[0])
                        and tuple(x) < tuple(incumbent[1]))):
                incumbent = (obj, x, y)
            continue
        # most fractional variable, lowest index on ties
        j = int(np.argmax(np.round(frac, 12)))
        for lo_side in (True, False):
            clb, cub = nlb.copy(), nub.copy()
            if lo_side:
                cub[j] = np.floor(xs[j])
            else:
                clb[j] = np.ceil(xs[j])
            if clb[j] > cub[j]:
                continue
            child = lp.solve(clb, cub)
            if child.success:
                heapq.heappush(heap, (child.fun, next(counter), clb, cub, child.x))
    if incumbent is None:
        return None
    return incumbent[1], incumbent[2], incumbent[0]


def _branch_and_bound(poly: BoundedPolyhedron, int_obj, cont_obj, l1: Optional[_L1Rows] = None,
                      node_limit: int = NODE_LIMIT) -> tuple[SubsystemSolution, float]:
    lp = _NodeLP(poly, np.asarray(int_obj, float), np.asarray(cont_obj, float), l1)
    lb, ub = poly.int_lb.copy(), poly.int_ub.copy()
    found = _bb_search(lp, lb, ub, node_limit=node_limit)
    if found is None:
        raise InfeasibleSubproblem("local set is empty")
    x, y, obj = found
    # lexicographic refinement among optimal solutions
    for k in range(poly.n_int):
        while x[k] > lb[k]:
            ub_k = ub.copy()
            ub_k[k] = x[k] - 1
            lower = _bb_search(lp, lb, ub_k, cutoff=obj, first=True, node_limit=node_limit)
            if lower is None:
                break
            x, y, _ = lower
        lb[k] = ub[k] = x[k]
    obj, y = lp.evaluate(x)
    return SubsystemSolution(x, y), float(obj)


def branch_and_bound(sub: Subsystem, int_obj=None, cont_obj=None, l1=None,
                     node_limit: int = NODE_LIMIT) -> SubsystemSolution:
    """Exact minimizer of a linear objective over a subsystem's local set.

    ``l1`` optionally adds ``rho * ||A^x x + A^y y + offset||_1`` as a tuple
    ``(int_part, cont_part, offset, rho)``, linearized with one bounding
    variable per row.
    """
    rows = None
    if l1 is not None:
        rows = _L1Rows(*(np.asarray(a, float) for a in l1[:3]), float(l1[3]))
    sol, _ = _branch_and_bound(as_polyhedron(sub.local_set),
                               sub.int_cost if int_obj is None else int_obj,
                               sub.cont_cost if cont_obj is None else cont_obj,
                               rows, node_limit)
    return sol


# ---------------------------------------------------------------------------
# subproblems

def subproblem_objective(sub: Subsystem, lam, sol: SubsystemSolution) -> float:
    cx, cy = sub.modified_costs(np.asarray(lam, float))
    return float(cx @ sol.x + cy @ sol.y)


def penalized_objective(sub: Subsystem, lam, ctx: PenaltyContext, sol: SubsystemSolution) -> float:
    resid = sub.usage(sol) + ctx.residual_others
    return subproblem_objective(sub, lam, sol) + ctx.rho * float(np.abs(resid).sum())


def solve_subproblem(sub: Subsystem, lam) -> SubsystemSolution:
    """Minimize ``(c^x + A^x' lam) x + (c^y + A^y' lam) y`` over the local set."""
    cx, cy = sub.modified_costs(np.asarray(lam, float))
    ls = sub.local_set
    if isinstance(ls, KnapsackSet):
        sel, _ = knapsack_dp(ls.weights, -cx, ls.capacity)
        return SubsystemSolution(sel.astype(float))
    sol, _ = _branch_and_bound(ls, cx, cy)
    return sol


def _separable_rows(sub: Subsystem) -> bool:
    """True when every coupling row touches at most one variable of a pure-binary block."""
    if not isinstance(sub.local_set, KnapsackSet) or sub.n_cont:
        return False
    return bool(np.all(np.count_nonzero(sub.int_coupling, axis=1) <= 1))


def solve_penalized_with_value(sub: Subsystem, lam, ctx: PenaltyContext
                               ) -> tuple[SubsystemSolution, float]:
    lam = np.asarray(lam, float)
    cx, cy = sub.modified_costs(lam)
    r = ctx.residual_others
    if ctx.rho == 0:
        sol = solve_subproblem(sub, lam)
        return sol, subproblem_objective(sub, lam, sol)
    if _separable_rows(sub):
        A = sub.int_coupling
        # rows untouched by a variable contribute |r| - |r| = 0
        delta = cx + ctx.rho * (np.abs(A + r[:, None]) - np.abs(r)[:, None]).sum(axis=0)
        ls = sub.local_set
        sel, _ = knapsack_dp(ls.weights, -delta, ls.capacity)
        sol = SubsystemSolution(sel.astype(float))
        return sol, penalized_objective(sub, lam, ctx, sol)
    return solve_penalized_aux(sub, lam, ctx)


def solve_penalized_aux(sub: Subsystem, lam, ctx: PenaltyContext
                        ) -> tuple[SubsystemSolution, float]:
    """Penalized subproblem through one bounding variable ``t_r >= |row r|`` per coupling row.

    Returns the minimizer and the optimal objective of that linear model.
    """
    cx, cy = sub.modified_costs(np.asarray(lam, float))
    rows = _L1Rows(sub.int_coupling, sub.cont_coupling, ctx.residual_others, ctx.rho)
    return _branch_and_bound(as_polyhedron(sub.local_set), cx, cy, rows)


def solve_subproblem_penalized(sub: Subsystem, lam, ctx: PenaltyContext) -> SubsystemSolution:
    """Subproblem objective plus ``rho * ||A^x x + A^y y + residual_others||_1``."""
    return solve_penalized_with_value(sub, lam, ctx)[0]


# ---------------------------------------------------------------------------
# enumeration

def count_points(sub: Subsystem) -> int:
    lo, hi = sub.int_bounds()
    return int(np.prod([int(h - l) + 1 for l, h in zip(lo, hi)], dtype=object))


def brute_force_enumerate(sub: Subsystem, cont_cost=None, cap: int = ENUM_CAP
                          ) -> list[SubsystemSolution]:
    """Every feasible integer point in lexicographic order.

    For mixed blocks the continuous part of each point is the LP minimizer of
    ``cont_cost`` (default: the subsystem's own continuous costs).
    """
    total = count_points(sub)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} integer points exceed the cap of {cap}")
    lo, hi = sub.int_bounds()
    ranges = [range(int(l), int(h) + 1) for l, h in zip(lo, hi)]
    ls = sub.local_set
    out = []
    if isinstance(ls, KnapsackSet):
        for combo in itertools.product(*ranges):
            x = np.array(combo, dtype=float)
            if ls.weights @ x <= ls.capacity:
                out.append(SubsystemSolution(x))
        return out
    cy = sub.cont_cost if cont_cost is None else np.asarray(cont_cost, float)
    for combo in itertools.product(*ranges):
        x = np.array(combo, dtype=float)
        if ls.n_cont == 0:
            if ls.rows_ok(x, np.zeros(0)):
                out.append(SubsystemSolution(x))
            continue
        y = _best_continuous(ls, x, cy)
        if y is not None:
            out.append(SubsystemSolution(x, y))
    return out


def _best_continuous(ls: BoundedPolyhedron, x, cy):
    nx = ls.n_int
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, rhs, sense in zip(ls.matrix, ls.rhs, ls.senses):
        r = rhs - row[:nx] @ x
        if sense == LE:
            A_ub.append(row[nx:]); b_ub.append(r)
        elif sense == GE:
            A_ub.append(-row[nx:]); b_ub.append(-r)
        else:
            A_eq.append(row[nx:]); b_eq.append(r)
    ny = ls.n_cont
    res = linprog(cy, np.array(A_ub).reshape(-1, ny), b_ub, np.array(A_eq).reshape(-1, ny), b_eq,
                  list(zip(ls.cont_lb, ls.cont_ub)))
    return res.x if res.success else None
