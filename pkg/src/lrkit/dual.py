"""Exact dual evaluation and the dual-optimum oracle for enumerable instances."""
from __future__ import annotations

import numpy as np

from .model import GE, LE, FullSolution, SeparableMilp, lagrangian_value
from .oracles import (ENUM_CAP, EnumerationCapExceeded, brute_force_enumerate, count_points,
                      solve_subproblem)
from .simplex import OPTIMAL, UNBOUNDED, linprog


class DualUnbounded(ValueError):
    """The dual has no finite maximum, i.e. the coupling rows cannot be met."""


def evaluate_dual(problem: SeparableMilp, lam) -> tuple[float, FullSolution]:
    """Solve every subproblem exactly at ``lam``; return q(lam) and the minimizer."""
    lam = np.asarray(lam, dtype=float)
    sol = FullSolution(tuple(solve_subproblem(sub, lam) for sub in problem.subsystems))
    return lagrangian_value(problem, sol, lam), sol


def compute_dual_optimum(problem: SeparableMilp, cap: int = ENUM_CAP) -> tuple[float, np.ndarray]:
    """Maximize q over the multiplier domain by one explicit LP.

    Every enumerated integer point p of subsystem i yields a cut
    ``theta_i <= c^x p + lam . A^x p + min_y (c^y + A^y' lam) y``; the inner
    continuous minimum is replaced by its LP dual so the whole model stays
    linear in (lam, theta, dual variables).
    """
    m, n_sub = problem.m, problem.n_sub
    total = sum(count_points(sub) for sub in problem.subsystems)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} enumerable points exceed the cap of {cap}")

    # column layout: [lam (m) | theta (n_sub) | per-point dual blocks ...]
    eq_rows = []
    n_extra = 0
    extra_bounds = []
    ub_rows = []
    for i, sub in enumerate(problem.subsystems):
        points = brute_force_enumerate(sub, cap=cap)
        if not points:
            raise DualUnbounded(f"subsystem {i} has an empty local set")
        for p in points:
            # theta_i - lam . A^x p - [inner dual value] <= c^x p
            lam_coeffs = -(sub.int_coupling @ p.x)
            const = float(sub.int_cost @ p.x)
            if sub.n_cont == 0:
                ub_rows.append((lam_coeffs, i, const, None))
                continue
            ls = sub.local_set
            nx, ny = ls.n_int, ls.n_cont
            D = ls.matrix[:, nx:]
            e = ls.rhs - ls.matrix[:, :nx] @ p.x
            k = len(e)
            # dual vars: u (k rows, sign by sense), pi (ny), w (ny)
            start = n_extra
            n_extra += k + 2 * ny
            for sense in ls.senses:
                extra_bounds.append((None, 0.0) if sense == LE else (0.0, None) if sense == GE
                                    else (None, None))
            extra_bounds.extend([(0.0, None)] * (2 * ny))
            dual_obj = np.concatenate([e, ls.cont_lb, -ls.cont_ub])
            ub_rows.append((lam_coeffs, i, const, (start, -dual_obj)))
            # D' u + pi - w - A^y' lam = c^y
            for t in range(ny):
                coeffs = np.zeros(k + 2 * ny)
                coeffs[:k] = D[:, t]
                coeffs[k + t] = 1.0
                coeffs[k + ny + t] = -1.0
                eq_rows.append((start, coeffs, -sub.cont_coupling[:, t], float(sub.cont_cost[t])))

    width = m + n_sub + n_extra
    A_ub = np.zeros((len(ub_rows), width))
    b_ub = np.zeros(len(ub_rows))
    for r, (lam_coeffs, i, const, dual) in enumerate(ub_rows):
        A_ub[r, :m] = lam_coeffs
        A_ub[r, m + i] = 1.0
        if dual is not None:
            start, coeffs = dual
            A_ub[r, m + n_sub + start:m + n_sub + start + len(coeffs)] = coeffs
        b_ub[r] = const
    A_eq = np.zeros((len(eq_rows), width))
    b_eq = np.zeros(len(eq_rows))
    for r, (start, coeffs, lam_coeffs, rhs) in enumerate(eq_rows):
        A_eq[r, m + n_sub + start:m + n_sub + start + len(coeffs)] = coeffs
        A_eq[r, :m] = lam_coeffs
        b_eq[r] = rhs

    # maximize sum(theta) - b . lam
    c = np.zeros(width)
    c[:m] = problem.rhs
    c[m:m + n_sub] = -1.0
    bounds = [(0.0, None) if s == LE else (None, None) for s in problem.senses]
    bounds += [(None, None)] * n_sub + extra_bounds
    res = linprog(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if res.status == UNBOUNDED:
        raise DualUnbounded("dual function is unbounded above; the coupling rows are infeasible")
    if res.status != OPTIMAL:
        raise ArithmeticError(f"dual LP ended with status {res.status}")
    lam_hat = res.x[:m].copy()
    return -res.fun, lam_hat

