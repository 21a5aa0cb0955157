"""Block-separable MILP data model and the Lagrangian quantities built on it.

A problem is a list of subsystems, each owning integer variables ``x_i`` and
continuous variables ``y_i`` restricted to a local set, tied together by
coupling rows ``sum_i A_i^x x_i + A_i^y y_i (= or <=) b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

EQ = "eq"
LE = "le"
GE = "ge"

COUPLING_SENSES = (EQ, LE)
LOCAL_SENSES = (EQ, LE, GE)

LOCAL_TOL = 1e-9
DEFAULT_FEAS_TOL = 1e-6


class DimensionError(ValueError):
    pass


def _as_matrix(a, rows: int | None = None) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(rows or 0, 0)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class KnapsackSet:
    """Binary variables with a single capacity row ``weights . x <= capacity``."""

    weights: np.ndarray
    capacity: int

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.int64))

    @property
    def n_int(self) -> int:
        return len(self.weights)

    @property
    def n_cont(self) -> int:
        return 0


@dataclass(frozen=True, eq=False)
class BoundedPolyhedron:
    """Local rows ``matrix @ [x; y] (sense) rhs`` plus finite boxes on x and y."""

    matrix: np.ndarray
    rhs: np.ndarray
    senses: tuple
    int_lb: np.ndarray
    int_ub: np.ndarray
    cont_lb: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cont_ub: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        int_lb = np.asarray(self.int_lb, dtype=float)
        n = len(int_lb) + len(np.asarray(self.cont_lb))
        object.__setattr__(self, "matrix", _as_matrix(self.matrix).reshape(-1, n))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "int_lb", int_lb)
        object.__setattr__(self, "int_ub", np.asarray(self.int_ub, dtype=float))
        object.__setattr__(self, "cont_lb", np.asarray(self.cont_lb, dtype=float))
        object.__setattr__(self, "cont_ub", np.asarray(self.cont_ub, dtype=float))

    @property
    def n_int(self) -> int:
        return len(self.int_lb)

    @property
    def n_cont(self) -> int:
        return len(self.cont_lb)

    def rows_ok(self, x: np.ndarray, y: np.ndarray, tol: float = LOCAL_TOL) -> bool:
        if len(self.rhs) == 0:
            return True
        lhs = self.matrix @ np.concatenate([x, y]) - self.rhs
        for r, sense in enumerate(self.senses):
            if sense == EQ and abs(lhs[r]) > tol:
                return False
            if sense == LE and lhs[r] > tol:
                return False
            if sense == GE and lhs[r] < -tol:
                return False
        return True


LocalSet = Union[KnapsackSet, BoundedPolyhedron]


@dataclass(frozen=True, eq=False)
class Subsystem:
    int_cost: np.ndarray
    cont_cost: np.ndarray
    int_coupling: np.ndarray
    cont_coupling: np.ndarray
    local_set: LocalSet

    def __post_init__(self):
        int_cost = np.asarray(self.int_cost, dtype=float).reshape(-1)
        cont_cost = np.asarray(self.cont_cost, dtype=float).reshape(-1)
        int_coupling = _as_matrix(self.int_coupling)
        rows = int_coupling.shape[0]
        cont_coupling = np.asarray(self.cont_coupling, dtype=float)
        if cont_coupling.size == 0:
            cont_coupling = np.zeros((rows, len(cont_cost)))
        object.__setattr__(self, "int_cost", int_cost)
        object.__setattr__(self, "cont_cost", cont_cost)
        object.__setattr__(self, "int_coupling", int_coupling)
        object.__setattr__(self, "cont_coupling", _as_matrix(cont_coupling))

    @property
    def n_int(self) -> int:
        return len(self.int_cost)

    @property
    def n_cont(self) -> int:
        return len(self.cont_cost)

    def int_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(self.local_set, KnapsackSet):
            return np.zeros(self.n_int), np.ones(self.n_int)
        return self.local_set.int_lb, self.local_set.int_ub

    def modified_costs(self, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-variable costs of the relaxed subproblem at multipliers ``lam``."""
        return (self.int_cost + self.int_coupling.T @ lam,
                self.cont_cost + self.cont_coupling.T @ lam)

    def usage(self, sol: "SubsystemSolution") -> np.ndarray:
        """This subsystem's contribution ``A^x x + A^y y`` to the coupling rows."""
        out = self.int_coupling @ sol.x
        if self.n_cont:
            out = out + self.cont_coupling @ sol.y
        return out

    def cost(self, sol: "SubsystemSolution") -> float:
        return float(self.int_cost @ sol.x + self.cont_cost @ sol.y)

    def is_local_feasible(self, sol: "SubsystemSolution", tol: float = LOCAL_TOL) -> bool:
        return not local_breaches(self, sol, tol)


@dataclass(frozen=True, eq=False)
class SubsystemSolution:
    x: np.ndarray
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(np.rint(self.x), dtype=float).reshape(-1))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))

    def key(self) -> tuple:
        return tuple(int(v) for v in self.x)

    def __eq__(self, other):
        if not isinstance(other, SubsystemSolution):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __repr__(self):
        if len(self.y):
            return f"SubsystemSolution(x={self.key()}, y={self.y.tolist()})"
        return f"SubsystemSolution(x={self.key()})"


@dataclass(frozen=True)
class FullSolution:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, i) -> SubsystemSolution:
        return self.parts[i]

    def replace(self, i: int, part: SubsystemSolution) -> "FullSolution":
        parts = list(self.parts)
        parts[i] = part
        return FullSolution(tuple(parts))


@dataclass(frozen=True, eq=False)
class SeparableMilp:
    subsystems: tuple
    rhs: np.ndarray
    senses: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).reshape(-1))
        senses = self.senses
        if isinstance(senses, str):
            senses = (senses,) * len(self.rhs)
        object.__setattr__(self, "senses", tuple(senses))

    @property
    def m(self) -> int:
        return len(self.rhs)

    @property
    def n_sub(self) -> int:
        return len(self.subsystems)

    @property
    def inequality_mask(self) -> np.ndarray:
        return np.array([s == LE for s in self.senses], dtype=bool)


def validate(problem: SeparableMilp) -> list[str]:
    """Return human-readable invariant violations; an empty list means well-formed."""
    issues = []
    m = problem.m
    if m < 1:
        issues.append("coupling: at least one coupling row is required")
    if not np.all(np.isfinite(problem.rhs)):
        issues.append("coupling: rhs contains non-finite values")
    if len(problem.senses) != m:
        issues.append(f"coupling: {len(problem.senses)} row senses for {m} rows")
    for r, s in enumerate(problem.senses):
        if s not in COUPLING_SENSES:
            issues.append(f"coupling: row {r} has unknown sense {s!r}")
    if problem.n_sub < 1:
        issues.append("subsystems: at least one subsystem is required")

    for i, sub in enumerate(problem.subsystems):
        tag = f"subsystem {i}"
        if sub.int_coupling.shape != (m, sub.n_int):
            issues.append(f"{tag}: integer coupling block has shape {sub.int_coupling.shape}, "
                          f"expected ({m}, {sub.n_int}) (dimension mismatch)")
        if sub.cont_coupling.shape != (m, sub.n_cont):
            issues.append(f"{tag}: continuous coupling block has shape {sub.cont_coupling.shape}, "
                          f"expected ({m}, {sub.n_cont}) (dimension mismatch)")
        for label, arr in (("integer costs", sub.int_cost), ("continuous costs", sub.cont_cost),
                           ("integer coupling", sub.int_coupling),
                           ("continuous coupling", sub.cont_coupling)):
            if not np.all(np.isfinite(arr)):
                issues.append(f"{tag}: {label} contain non-finite values")
        ls = sub.local_set
        if isinstance(ls, KnapsackSet):
            if ls.n_int != sub.n_int:
                issues.append(f"{tag}: knapsack has {ls.n_int} weights for {sub.n_int} variables "
                              "(dimension mismatch)")
            if sub.n_cont:
                issues.append(f"{tag}: knapsack sets carry no continuous variables")
            if ls.capacity < 0:
                issues.append(f"{tag}: negative knapsack capacity {ls.capacity}")
            if np.any(ls.weights < 0):
                issues.append(f"{tag}: negative knapsack weight")
        elif isinstance(ls, BoundedPolyhedron):
            if ls.n_int != sub.n_int or len(ls.int_ub) != sub.n_int:
                issues.append(f"{tag}: integer bounds do not match {sub.n_int} variables "
                              "(dimension mismatch)")
            if ls.n_cont != sub.n_cont or len(ls.cont_ub) != sub.n_cont:
                issues.append(f"{tag}: continuous bounds do not match {sub.n_cont} variables "
                              "(dimension mismatch)")
            if ls.matrix.shape[0] != len(ls.rhs) or len(ls.senses) != len(ls.rhs):
                issues.append(f"{tag}: local rows, rhs and senses disagree in length")
            if ls.matrix.shape[1] != ls.n_int + ls.n_cont:
                issues.append(f"{tag}: local matrix width {ls.matrix.shape[1]} does not match "
                              f"{ls.n_int + ls.n_cont} variables (dimension mismatch)")
            for s in ls.senses:
                if s not in LOCAL_SENSES:
                    issues.append(f"{tag}: unknown local row sense {s!r}")
            for label, lo, hi in (("integer", ls.int_lb, ls.int_ub),
                                  ("continuous", ls.cont_lb, ls.cont_ub)):
                if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                    issues.append(f"{tag}: unbounded {label} variable (bounds must be finite)")
                elif np.any(lo > hi):
                    issues.append(f"{tag}: {label} lower bound exceeds upper bound")
            if ls.n_int and np.all(np.isfinite(ls.int_lb)):
                if np.any(ls.int_lb != np.round(ls.int_lb)) or np.any(ls.int_ub != np.round(ls.int_ub)):
                    issues.append(f"{tag}: integer bounds must be integral")
        else:
            issues.append(f"{tag}: unknown local set type {type(ls).__name__}")
    return issues


def _check_dims(problem: SeparableMilp, solution: FullSolution):
    if len(solution) != problem.n_sub:
        raise DimensionError(f"solution has {len(solution)} parts for {problem.n_sub} subsystems")
    for i, (sub, part) in enumerate(zip(problem.subsystems, solution.parts)):
        if len(part.x) != sub.n_int or len(part.y) != sub.n_cont:
            raise DimensionError(f"subsystem {i}: solution sizes ({len(part.x)}, {len(part.y)}) "
                                 f"do not match ({sub.n_int}, {sub.n_cont})")


def subgradient(problem: SeparableMilp, solution: FullSolution) -> np.ndarray:
    """Coupling violation ``sum_i A_i^x x_i + A_i^y y_i - b``."""
    _check_dims(problem, solution)
    g = -problem.rhs.copy()
    for sub, part in zip(problem.subsystems, solution.parts):
        g += sub.usage(part)
    return g


def primal_cost(problem: SeparableMilp, solution: FullSolution) -> float:
    _check_dims(problem, solution)
    return float(sum(sub.cost(part) for sub, part in zip(problem.subsystems, solution.parts)))


def lagrangian_value(problem: SeparableMilp, solution: FullSolution, lam) -> float:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (problem.m,):
        raise DimensionError(f"multipliers have shape {lam.shape}, expected ({problem.m},)")
    return primal_cost(problem, solution) + float(lam @ subgradient(problem, solution))


def project_multipliers(lam, senses: Sequence[str]) -> np.ndarray:
    """Clamp inequality-row multipliers at zero; equality rows stay free."""
    lam = np.array(lam, dtype=float)
    mask = np.array([s == LE for s in senses], dtype=bool)
    lam[mask] = np.maximum(lam[mask], 0.0)
    return lam


def local_breaches(sub: Subsystem, sol: SubsystemSolution, tol: float = LOCAL_TOL) -> list[str]:
    out = []
    ls = sub.local_set
    if len(sol.x) != sub.n_int or len(sol.y) != sub.n_cont:
        return ["dimension mismatch"]
    if isinstance(ls, KnapsackSet):
        if np.any((sol.x != 0) & (sol.x != 1)):
            out.append("non-binary value")
        load = int(ls.weights @ sol.x.astype(np.int64))
        if load > ls.capacity:
            out.append(f"capacity exceeded: load {load} > {ls.capacity}")
        return out
    if np.any(sol.x < ls.int_lb) or np.any(sol.x > ls.int_ub):
        out.append("integer bound violated")
    if np.any(sol.y < ls.cont_lb - tol) or np.any(sol.y > ls.cont_ub + tol):
        out.append("continuous bound violated")
    if not ls.rows_ok(sol.x, sol.y, tol):
        out.append("local row violated")
    return out


@dataclass
class FeasibilityReport:
    row_violations: list = field(default_factory=list)    # (row, residual)
    local_breaches: list = field(default_factory=list)    # (subsystem, message)

    @property
    def feasible(self) -> bool:
        return not self.row_violations and not self.local_breaches

    def __bool__(self):
        # truthy when something is wrong, like a non-empty list of problems
        return not self.feasible


def check_feasible(problem: SeparableMilp, solution: FullSolution,
                   tol: float = DEFAULT_FEAS_TOL) -> FeasibilityReport:
    report = FeasibilityReport()
    g = subgradient(problem, solution)
    for r, (res, sense) in enumerate(zip(g, problem.senses)):
        if (sense == EQ and abs(res) > tol) or (sense == LE and res > tol):
            report.row_violations.append((r, float(res)))
    for i, (sub, part) in enumerate(zip(problem.subsystems, solution.parts)):
        for msg in local_breaches(sub, part):
            report.local_breaches.append((i, msg))
    return report
