"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Desk-scale only. Phase 1 keeps one artificial column per row, which lets an
infeasible verdict carry a Farkas vector read straight off the final phase-1
reduced costs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000


class SimplexIterationLimit(RuntimeError):
    pass


@dataclass
class StandardResult:
    status: str
    x: Optional[np.ndarray] = None
    fun: float = float("nan")
    # For INFEASIBLE: pi with A^T pi <= 0 and b^T pi > 0 (proves Ax = b, x >= 0 empty).
    farkas: Optional[np.ndarray] = None
    iterations: int = 0
    # For OPTIMAL: row prices pi with c_B = B^T pi (zero on redundant rows).
    duals: Optional[np.ndarray] = None


class _Tableau:
    """Tableau over ``A x = b`` with objective ``cost``; keeps the original data
    so the working tableau can be rebuilt from the basis when round-off builds up."""

    REINVERT_EVERY = 50

    def __init__(self, A: np.ndarray, b: np.ndarray, cost: np.ndarray, basis: list[int]):
        self.A, self.b, self.cost = A, b, cost
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.basis = list(basis)
        self.iterations = 0
        self.reinvert()

    def reinvert(self):
        A, basis = self.A, self.basis
        m, n = A.shape
        T = self.T
        if m:
            B = A[:, basis]
            try:
                T[:m] = np.linalg.solve(B, np.column_stack([A, self.b]))
            except np.linalg.LinAlgError:
                pass  # keep the pivoted tableau
        cb = self.cost[basis]
        T[-1, :n] = self.cost - cb @ T[:m, :n]
        T[-1, -1] = -cb @ T[:m, -1]
        T[:m, basis] = np.eye(m)
        T[-1, basis] = 0.0

    def pivot(self, r: int, j: int):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if len(nz):
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j
        self.iterations += 1
        if self.iterations % self.REINVERT_EVERY == 0:
            self.reinvert()

    def run(self, allowed: int, max_iter: int, tol: float, bounded: bool = False) -> bool:
        """Optimize until no reduced cost is negative; False means unbounded.

        With ``bounded`` the objective is known to be bounded below, so an
        improving column without a pivot row can only be round-off; its reduced
        cost is zeroed.
        """
        T = self.T
        settled = False
        while True:
            if self.iterations >= max_iter:
                raise SimplexIterationLimit(f"simplex exceeded {max_iter} pivots")
            candidates = np.nonzero(T[-1, :allowed] < -tol)[0]
            if len(candidates) == 0:
                if settled:
                    return True
                # confirm optimality on a freshly rebuilt tableau
                self.reinvert()
                settled = True
                continue
            j = int(candidates[0])  # Bland: lowest index
            col = T[:-1, j]
            rows = np.nonzero(col > tol)[0]
            if len(rows) == 0:
                if not settled:
                    self.reinvert()
                    settled = True
                    continue
                if bounded:
                    T[-1, j] = 0.0
                    continue
                return False
            settled = False
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)


def simplex_standard(c, A, b, max_iter: int = DEFAULT_MAX_ITER,
                     tol: float = PIVOT_TOL) -> StandardResult:
    """Minimize ``c.x`` subject to ``A x = b``, ``x >= 0``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    m, n = A.shape
    if m == 0:
        if np.any(c < -tol):
            return StandardResult(UNBOUNDED)
        return StandardResult(OPTIMAL, np.zeros(n), 0.0)

    flip = np.where(b < 0, -1.0, 1.0)
    A1 = np.hstack([A * flip[:, None], np.eye(m)])
    b1 = b * flip
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab = _Tableau(A1, b1, cost1, [n + i for i in range(m)])
    tab.run(n + m, max_iter, tol, bounded=True)
    T = tab.T
    phase1 = -T[-1, -1]
    scale = max(1.0, float(np.abs(b).max()))
    if phase1 > tol * scale:
        pi = 1.0 - T[-1, n:n + m]
        return StandardResult(INFEASIBLE, farkas=flip * pi, iterations=tab.iterations)

    # drive artificials out of the basis; rows where that is impossible are redundant
    keep = []
    for r in range(m):
        if tab.basis[r] >= n:
            cand = np.nonzero(np.abs(T[r, :n]) > tol)[0]
            if len(cand) == 0:
                continue
            tab.pivot(r, int(cand[0]))
        keep.append(r)
    basis = [tab.basis[r] for r in keep]
    # phase 2 works on the reduced system expressed in the current basis
    tab2 = _Tableau(T[keep, :n].copy(), T[keep, -1].copy(), c, basis)
    tab2.iterations = tab.iterations
    if not tab2.run(n, max_iter, tol):
        return StandardResult(UNBOUNDED, iterations=tab2.iterations)
    x = np.zeros(n)
    x[tab2.basis] = tab2.T[:-1, -1]
    x[x < 0] = 0.0
    duals = np.zeros(m)
    if keep:
        try:
            duals[keep] = np.linalg.solve(A[keep][:, tab2.basis].T, c[tab2.basis])
        except np.linalg.LinAlgError:
            duals = None
    return StandardResult(OPTIMAL, x, float(c @ x), iterations=tab2.iterations, duals=duals)


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray] = None
    fun: float = float("nan")
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
            bounds: Optional[Sequence] = None, max_iter: int = DEFAULT_MAX_ITER) -> LPResult:
    """Minimize ``c.x`` over general rows and per-variable bounds.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs, ``None`` or ``+-inf`` meaning
    unbounded on that side; default is ``x >= 0``.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if bounds is None:
        bounds = [(0.0, None)] * n

    # x = offset + M z with z >= 0
    cols = []
    offset = np.zeros(n)
    box_rows = []  # (z column, width)
    for k, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return LPResult(INFEASIBLE)
        if np.isfinite(lo):
            offset[k] = lo
            cols.append((k, 1.0))
            if np.isfinite(hi):
                box_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[k] = hi
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    N = len(cols)
    M = np.zeros((n, N))
    for j, (k, sgn) in enumerate(cols):
        M[k, j] = sgn

    n_ub = len(b_ub) + len(box_rows)
    n_rows = n_ub + len(b_eq)
    A = np.zeros((n_rows, N + n_ub))
    rhs = np.zeros(n_rows)
    A[:len(b_ub), :N] = A_ub @ M
    rhs[:len(b_ub)] = b_ub - A_ub @ offset
    for t, (j, width) in enumerate(box_rows):
        A[len(b_ub) + t, j] = 1.0
        rhs[len(b_ub) + t] = width
    A[:n_ub, N:] = np.eye(n_ub)
    A[n_ub:, :N] = A_eq @ M
    rhs[n_ub:] = b_eq - A_eq @ offset
    cost = np.concatenate([M.T @ c, np.zeros(n_ub)])

    res = simplex_standard(cost, A, rhs, max_iter=max_iter)
    if res.status != OPTIMAL:
        return LPResult(res.status, iterations=res.iterations)
    x = offset + M @ res.x[:N]
    return LPResult(OPTIMAL, x, float(c @ x), res.iterations)
