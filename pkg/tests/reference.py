"""Independent reference computations used as test oracles.

Nothing here calls the lrkit solvers it is compared against: enumeration is
plain itertools, LPs go through scipy's HiGHS, and instances are built from raw
arrays with the model constructors only.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from lrkit.model import (EQ, GE, LE, BoundedPolyhedron, KnapsackSet, SeparableMilp, Subsystem)

T1_COSTS = np.array([[1, 2], [2, 1]])
T1_WEIGHTS = np.array([[1, 1], [1, 1]])
T1_CAPS = np.array([1, 1])
T1_TEXT = "2 2\n1 2\n2 1\n1 1\n1 1\n1 1\n"


def gap_model(costs, weights, caps, name="") -> SeparableMilp:
    costs = np.asarray(costs, float)
    n_mach, n_jobs = costs.shape
    subs = [Subsystem(costs[i], np.zeros(0), np.eye(n_jobs), np.zeros((n_jobs, 0)),
                      KnapsackSet(np.asarray(weights[i]), int(caps[i]))) for i in range(n_mach)]
    return SeparableMilp(tuple(subs), np.ones(n_jobs), EQ, name)


def t1() -> SeparableMilp:
    return gap_model(T1_COSTS, T1_WEIGHTS, T1_CAPS, "T1")


def random_gap_arrays(seed, machines, jobs, ratio):
    rng = np.random.default_rng(seed)
    c = rng.integers(1, 21, (machines, jobs))
    w = rng.integers(1, 11, (machines, jobs))
    cap = np.floor(ratio * w.sum(axis=1) / machines).astype(int)
    return c, w, cap


# ---------------------------------------------------------------------------
# enumeration

def int_points(sub: Subsystem):
    """Every integer point of the local set (continuous part ignored)."""
    ls = sub.local_set
    if isinstance(ls, KnapsackSet):
        for bits in itertools.product((0, 1), repeat=len(ls.weights)):
            x = np.array(bits)
            if x @ ls.weights <= ls.capacity:
                yield x.astype(float)
        return
    ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(ls.int_lb, ls.int_ub)]
    for combo in itertools.product(*ranges):
        x = np.array(combo, dtype=float)
        if ls.n_cont == 0:
            lhs = ls.matrix @ x if len(ls.rhs) else np.zeros(0)
            if _rows_hold(lhs, ls.rhs, ls.senses):
                yield x
        else:
            yield x


def _rows_hold(lhs, rhs, senses, tol=1e-9):
    for v, r, s in zip(lhs, rhs, senses):
        if s == EQ and abs(v - r) > tol:
            return False
        if s == LE and v > r + tol:
            return False
        if s == GE and v < r - tol:
            return False
    return True


def cont_min(ls: BoundedPolyhedron, x, cy):
    """min cy . y over the continuous slice at integer point x, by HiGHS; None if empty."""
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
    res = linprog(cy, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                  bounds=list(zip(ls.cont_lb, ls.cont_ub)), method="highs")
    if res.status != 0:
        return None
    return float(res.fun), res.x


def sub_min(sub: Subsystem, lam) -> float:
    """Exact minimum of the relaxed subproblem by enumeration."""
    lam = np.asarray(lam, float)
    cx = sub.int_cost + sub.int_coupling.T @ lam
    best = np.inf
    for x in int_points(sub):
        val = float(cx @ x)
        if sub.n_cont:
            cy = sub.cont_cost + sub.cont_coupling.T @ lam
            got = cont_min(sub.local_set, x, cy)
            if got is None:
                continue
            val += got[0]
        best = min(best, val)
    return best


def sub_penalized_min(sub: Subsystem, lam, rho, resid) -> float:
    """min of subproblem cost + rho ||A x + resid||_1 over a pure-integer local set."""
    lam = np.asarray(lam, float)
    cx = sub.int_cost + sub.int_coupling.T @ lam
    best = np.inf
    for x in int_points(sub):
        best = min(best, float(cx @ x) + rho * float(np.abs(sub.int_coupling @ x + resid).sum()))
    return best


def dual_value(problem: SeparableMilp, lam) -> float:
    lam = np.asarray(lam, float)
    return sum(sub_min(s, lam) for s in problem.subsystems) - float(lam @ problem.rhs)


def dual_optimum(problem: SeparableMilp):
    """max q by the explicit cutting-plane LP over all enumerated points, via HiGHS.

    Pure-integer instances only.
    """
    m, n = problem.m, problem.n_sub
    rows, rhs = [], []
    for i, sub in enumerate(problem.subsystems):
        assert sub.n_cont == 0
        for x in int_points(sub):
            # theta_i <= c x + lam . A x
            row = np.zeros(m + n)
            row[:m] = -(sub.int_coupling @ x)
            row[m + i] = 1.0
            rows.append(row)
            rhs.append(float(sub.int_cost @ x))
    c = np.concatenate([problem.rhs, -np.ones(n)])
    bounds = [(0, None) if s == LE else (None, None) for s in problem.senses] + [(None, None)] * n
    res = linprog(c, A_ub=np.array(rows), b_ub=rhs, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return -float(res.fun), res.x[:m]


def gap_optimum(costs, weights, caps):
    """Best assignment cost by trying every job-to-machine map; None when infeasible."""
    costs, weights = np.asarray(costs), np.asarray(weights)
    n_mach, n_jobs = costs.shape
    best = None
    for assign in itertools.product(range(n_mach), repeat=n_jobs):
        load = np.zeros(n_mach)
        for j, i in enumerate(assign):
            load[i] += weights[i, j]
        if np.all(load <= caps):
            v = sum(costs[i, j] for j, i in enumerate(assign))
            best = v if best is None else min(best, v)
    return best


def knapsack_best(weights, profits, cap):
    best = 0.0
    for bits in itertools.product((0, 1), repeat=len(weights)):
        x = np.array(bits)
        if x @ weights <= cap:
            best = max(best, float(x @ profits))
    return best


def halfspaces_feasible(G, h) -> bool:
    """Is {x : G x <= h} nonempty?  Rows are scaled to unit normals (same set) so the
    solver's absolute feasibility tolerance reads as a distance."""
    G, h = np.asarray(G, float), np.asarray(h, float)
    norms = np.linalg.norm(G, axis=1)
    if np.any((norms == 0) & (h < 0)):
        return False
    keep = norms > 0
    if not keep.any():
        return True
    G, h = G[keep] / norms[keep, None], h[keep] / norms[keep]
    res = linprog(np.zeros(G.shape[1]), A_ub=G, b_ub=h, bounds=[(None, None)] * G.shape[1],
                  method="highs")
    return res.status == 0


# ---------------------------------------------------------------------------
# random instances

def random_polyhedron_sub(rng, m, n_int=None, n_cont=0, integer_data=True) -> Subsystem:
    """Small bounded block whose local rows are satisfied by a planted point."""
    n_int = int(rng.integers(2, 5)) if n_int is None else n_int
    lb = rng.integers(-1, 1, n_int)
    ub = lb + rng.integers(1, 4, n_int)
    k = int(rng.integers(1, 3))
    n = n_int + n_cont
    mat = rng.integers(-3, 4, (k, n)).astype(float)
    plant = np.concatenate([rng.integers(lb, ub + 1), rng.uniform(0, 2, n_cont)])
    lhs = mat @ plant
    senses = tuple(rng.choice([LE, GE, EQ] if n_cont == 0 else [LE, GE], k))
    slack = rng.integers(0, 3, k)
    rhs = np.array([v if s == EQ else v + t if s == LE else v - t
                    for v, s, t in zip(lhs, senses, slack)])
    if integer_data:
        cx = rng.integers(-5, 6, n_int).astype(float)
        cy = rng.integers(-5, 6, n_cont).astype(float)
        Ax = rng.integers(-2, 3, (m, n_int)).astype(float)
        Ay = rng.integers(-2, 3, (m, n_cont)).astype(float)
    else:
        cx = rng.normal(size=n_int)
        cy = rng.normal(size=n_cont)
        Ax = rng.normal(size=(m, n_int))
        Ay = rng.normal(size=(m, n_cont))
    poly = BoundedPolyhedron(mat, rhs, senses, lb.astype(float), ub.astype(float),
                             np.zeros(n_cont), np.full(n_cont, 3.0))
    return Subsystem(cx, cy, Ax, Ay, poly)


def random_knapsack_sub(rng, m, n=None, separable=False) -> Subsystem:
    n = int(rng.integers(3, 9)) if n is None else n
    w = rng.integers(0, 8, n)
    cap = int(rng.integers(0, max(1, w.sum()) + 1))
    cost = rng.integers(-6, 10, n).astype(float)
    if separable:
        A = np.zeros((m, n))
        for v in range(n):
            A[rng.integers(m), v] = 1.0
    else:
        A = rng.integers(-2, 3, (m, n)).astype(float)
    return Subsystem(cost, np.zeros(0), A, np.zeros((m, 0)), KnapsackSet(w, cap))


def random_problem(seed, mixed=False, integer_data=True) -> SeparableMilp:
    """1 to 3 blocks, each with at most 10^4 enumerable integer points."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    subs = []
    for _ in range(int(rng.integers(1, 4))):
        kind = rng.integers(3)
        if kind == 0:
            subs.append(random_knapsack_sub(rng, m))
        elif kind == 1:
            subs.append(random_knapsack_sub(rng, m, separable=True))
        else:
            subs.append(random_polyhedron_sub(rng, m, n_cont=int(rng.integers(1, 3)) if mixed else 0,
                                              integer_data=integer_data))
    senses = tuple(rng.choice([EQ, LE], m))
    rhs = rng.integers(-2, 4, m).astype(float)
    return SeparableMilp(tuple(subs), rhs, senses, f"rand-{seed}")


def planted(problem: SeparableMilp, seed=0) -> SeparableMilp:
    """Same blocks with coupling right-hand sides met by random local integer points."""
    rng = np.random.default_rng(seed)
    rhs = np.zeros(problem.m)
    for sub in problem.subsystems:
        assert sub.n_cont == 0
        pts = list(int_points(sub))
        rhs += sub.int_coupling @ pts[int(rng.integers(len(pts)))]
    rhs += np.where(np.asarray(problem.senses) == LE, rng.integers(0, 2, problem.m), 0)
    return SeparableMilp(problem.subsystems, rhs, problem.senses, problem.name)
