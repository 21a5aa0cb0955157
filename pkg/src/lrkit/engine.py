"""The multiplier-update loop shared by every method.

Methods differ in two places: how the relaxed solution at the new multipliers
is produced (all subproblems, one subproblem, or subproblems until the
Lagrangian strictly improves) and how the stepsize is chosen.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import strategies as st
from .detector import DetectorInconclusive, IterateWindow, StepRecord, on_infeasible
from .dual import compute_dual_optimum, evaluate_dual
from .model import (FullSolution, SeparableMilp, check_feasible, lagrangian_value,
                    primal_cost, project_multipliers, subgradient, validate)
from .oracles import (InfeasibleSubproblem, PenaltyContext, penalized_objective,
                      solve_penalized_with_value, solve_subproblem, subproblem_objective)
from .repair import (RepairFailed, assignment_shape, default_rho0, repair_greedy,
                     repair_via_penalty)
from .trace import ConvergenceTrace, TraceRecord

log = logging.getLogger(__name__)

METHODS = ("subgradient", "polyak", "level", "interleaved", "incremental",
           "surrogate", "slr", "savlr", "slblr")
EXACT_METHODS = {"subgradient", "polyak", "level"}
SURROGATE_METHODS = {"surrogate", "slr", "savlr", "slblr"}

OPTIMAL = "optimal"
GAP_MET = "gap"
STEP_FLOOR = "step-floor"
MAX_ITER = "max-iter"
INFEASIBLE = "infeasible"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    method: str = "slblr"
    max_iter: int = 100_000
    step_floor: float = 1e-12
    gap_target: float = 1e-6
    lambda0: Optional[list] = None
    q_star: Optional[float] = None
    use_oracle: bool = False
    upper_bound: Optional[float] = None
    exact_interval: int = 10
    repair_interval: int = 0
    seed: int = 0
    record_wall_time: bool = False
    keep_history: bool = False
    feas_tol: float = 1e-6
    # stepsize rules
    nonsummable_a: float = 1.0
    nonsummable_b: float = 0.0
    polyak_gamma: float = 1.0
    surrogate_gamma: float = 0.9
    level_gamma: float = 1.0
    level_beta: float = 0.5
    level_tau: float = 0.5
    level_delta: Optional[float] = None
    level_path_budget: Optional[float] = None
    slr_M: float = 25.0
    slr_r: float = 0.05
    savlr_rho0: Optional[float] = None
    savlr_beta: float = 1.5
    savlr_cooldown: int = 5
    slblr_gamma: float = 0.5
    slblr_zeta: float = 0.95
    slblr_rho: float = 0.0
    window_cap: int = 200

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def check(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.step_floor < 0 or self.gap_target < 0:
            raise ConfigError("step_floor and gap_target must be >= 0")
        if self.exact_interval < 0 or self.repair_interval < 0:
            raise ConfigError("intervals must be >= 0")
        if not 0 < self.polyak_gamma < 2:
            raise ConfigError("polyak_gamma must lie in (0, 2)")
        if not 0 < self.surrogate_gamma < 1:
            raise ConfigError("surrogate_gamma must lie in (0, 1)")
        if not (0 < self.level_beta < 1 and 0 < self.level_tau < 1):
            raise ConfigError("level_beta and level_tau must lie in (0, 1)")
        if self.slr_M < 1 or not 0 <= self.slr_r <= 1:
            raise ConfigError("need slr_M >= 1 and 0 <= slr_r <= 1")
        if self.savlr_beta <= 1:
            raise ConfigError("savlr_beta must exceed 1")
        if not (0 < self.slblr_gamma < 1 and 0 < self.slblr_zeta < 1):
            raise ConfigError("slblr_gamma and slblr_zeta must lie in (0, 1)")
        if self.slblr_rho < 0 or (self.savlr_rho0 is not None and self.savlr_rho0 < 0):
            raise ConfigError("penalty coefficients must be >= 0")
        if self.window_cap < 2:
            raise ConfigError("window_cap must be at least 2")
        if self.nonsummable_a <= 0 or self.nonsummable_b < 0:
            raise ConfigError("need nonsummable_a > 0 and nonsummable_b >= 0")


@dataclass
class SurrogateSolution:
    """Relaxed solution that need not be subproblem-optimal at the current multipliers."""

    solution: FullSolution
    stamps: list
    L: float
    g: np.ndarray
    exact: bool = False

    @classmethod
    def build(cls, problem, solution, lam, stamps, exact=False):
        return cls(solution, list(stamps), lagrangian_value(problem, solution, lam),
                   subgradient(problem, solution), exact)


@dataclass
class DualIterate:
    k: int
    lam: np.ndarray
    step: Optional[st.StepDecision]
    surrogate: SurrogateSolution
    q_exact: Optional[float] = None


@dataclass
class RunResult:
    trace: ConvergenceTrace
    status: str
    lam: np.ndarray
    q_rec: Optional[float]
    best_lambda: Optional[np.ndarray]
    best_feasible: Optional[FullSolution] = None
    best_feasible_cost: Optional[float] = None
    q_star: Optional[float] = None
    lam_hat: Optional[np.ndarray] = None
    detections: list = field(default_factory=list)
    repairs: int = 0
    history: list = field(default_factory=list)

    @property
    def dual_gap(self) -> Optional[float]:
        if self.q_star is None or self.q_rec is None:
            return None
        return (self.q_star - self.q_rec) / max(1.0, abs(self.q_star))

    @property
    def final_gap(self) -> Optional[float]:
        if self.best_feasible_cost is None or self.q_rec is None:
            return None
        return (self.best_feasible_cost - self.q_rec) / max(1.0, abs(self.best_feasible_cost))


def surrogate_condition_holds(L_new: float, L_prev: float, tol: float = 0.0) -> bool:
    """Strict decrease of the Lagrangian at the same multipliers."""
    return L_new < L_prev - tol


def _improvement_tol(value: float) -> float:
    return 1e-12 * (1.0 + abs(value))


def surrogate_iterate(problem: SeparableMilp, lam, current: SurrogateSolution, cursor: int,
                      k: int, rho: float = 0.0):
    """Re-optimize subsystems round-robin until the Lagrangian strictly improves.

    Returns ``(surrogate, cursor, solves, improved)``.  When a full pass finds
    no improvement the relaxed problem is solved exactly instead.
    """
    lam = np.asarray(lam, float)
    n = problem.n_sub
    sol = current.solution
    L_prev = lagrangian_value(problem, sol, lam)
    if rho > 0:
        g = subgradient(problem, sol)
        L_prev += rho * float(np.abs(g).sum())
    fresh = [None] * n
    solves = 0
    for t in range(n):
        i = (cursor + t) % n
        sub = problem.subsystems[i]
        if rho > 0:
            ctx = PenaltyContext(rho, g - sub.usage(sol[i]))
            cand, new_obj = solve_penalized_with_value(sub, lam, ctx)
            old_obj = penalized_objective(sub, lam, ctx, sol[i])
        else:
            cand = solve_subproblem(sub, lam)
            new_obj = subproblem_objective(sub, lam, cand)
            old_obj = subproblem_objective(sub, lam, sol[i])
        solves += 1
        fresh[i] = cand
        L_new = L_prev - old_obj + new_obj
        if surrogate_condition_holds(L_new, L_prev, _improvement_tol(L_prev)):
            stamps = list(current.stamps)
            stamps[i] = k
            nxt = SurrogateSolution.build(problem, sol.replace(i, cand), lam, stamps)
            return nxt, (i + 1) % n, solves, True
    if rho > 0:
        _, exact = evaluate_dual(problem, lam)
        solves += n
    else:
        exact = FullSolution(tuple(fresh))
    return SurrogateSolution.build(problem, exact, lam, [k] * n, exact=True), cursor, solves, False


def incremental_pass(problem: SeparableMilp, lam, s: float, beta_split=None):
    """One sweep of per-subsystem multiplier updates.

    Subproblem i is solved at the partially updated multipliers left by
    subproblem i-1.  Returns ``(projected multipliers, solution)``.
    """
    psi = np.array(lam, dtype=float)
    n = problem.n_sub
    if beta_split is None:
        beta_split = [problem.rhs / n] * n
    if not np.allclose(np.sum(beta_split, axis=0), problem.rhs):
        raise ValueError("beta_split must sum to the coupling rhs")
    parts = []
    for sub, beta in zip(problem.subsystems, beta_split):
        part = solve_subproblem(sub, psi)
        parts.append(part)
        psi = psi + s * (sub.usage(part) - beta)
    return project_multipliers(psi, problem.senses), FullSolution(tuple(parts))


def primal_cost_bound(problem: SeparableMilp, shape=None) -> float:
    """Cost no feasible point can exceed, used when no feasible point is known yet."""
    if shape is not None:
        total = 0.0
        for j in range(shape.n_jobs):
            costs = [sub.int_cost[shape.var_of[i][j]] for i, sub in enumerate(problem.subsystems)
                     if shape.var_of[i][j] is not None]
            total += max(costs, default=0.0)
        return total
    total = 0.0
    for sub in problem.subsystems:
        lo, hi = sub.int_bounds()
        total += float(np.maximum(sub.int_cost * lo, sub.int_cost * hi).sum())
        if sub.n_cont:
            ls = sub.local_set
            total += float(np.maximum(sub.cont_cost * ls.cont_lb, sub.cont_cost * ls.cont_ub).sum())
    return total


class _Run:
    def __init__(self, problem: SeparableMilp, config: RunConfig):
        issues = validate(problem)
        if issues:
            raise ConfigError("invalid problem: " + "; ".join(issues))
        config.check()
        self.p = problem
        self.cfg = config
        self.method = config.method
        self.trace = ConvergenceTrace()
        self.t0 = time.perf_counter()
        self.q_rec: Optional[float] = None
        self.best_lambda = None
        self.ub: Optional[float] = config.upper_bound
        self.best_feasible: Optional[FullSolution] = None
        self.repairs = 0
        self.detections = []
        self.inconclusive = 0
        self.history = []
        self.q_star = config.q_star
        self.lam_hat = None
        self.shape = assignment_shape(problem)
        self.cursor = 0
        self.last_move = 0.0

    # -- bookkeeping -----------------------------------------------------

    def wall_ms(self) -> float:
        if not self.cfg.record_wall_time:
            return 0.0
        return (time.perf_counter() - self.t0) * 1000.0

    def note_dual(self, q: float, lam):
        if self.q_rec is None or q > self.q_rec:
            self.q_rec = q
            self.best_lambda = np.array(lam)

    def note_feasible(self, sol: FullSolution, cost: Optional[float] = None) -> bool:
        if cost is None:
            if not check_feasible(self.p, sol, self.cfg.feas_tol).feasible:
                return False
            cost = primal_cost(self.p, sol)
        if self.ub is None or cost < self.ub:
            self.ub = cost
            self.best_feasible = sol
        return True

    def try_repair(self, sol: FullSolution) -> bool:
        if self.note_feasible(sol):
            return True
        if self.shape is None:
            return False
        try:
            rep = repair_greedy(self.p, sol)
        except (RepairFailed, ValueError):
            return False
        self.repairs += 1
        self.note_feasible(rep.solution, rep.cost)
        return True

    def gap_met(self) -> bool:
        if self.q_rec is None:
            return False
        target = self.q_star if self.q_star is not None else self.ub
        if target is None:
            return False
        return (target - self.q_rec) / max(1.0, abs(target)) <= self.cfg.gap_target

    # -- main loop -------------------------------------------------------

    def run(self) -> RunResult:
        cfg, p = self.cfg, self.p
        if cfg.use_oracle and self.q_star is None:
            self.q_star, self.lam_hat = compute_dual_optimum(p)
        if self.method in ("polyak", "surrogate") and self.q_star is None:
            raise ConfigError(f"method {self.method!r} needs q_star or use_oracle")

        lam = np.zeros(p.m) if cfg.lambda0 is None else np.asarray(cfg.lambda0, dtype=float)
        if lam.shape != (p.m,):
            raise ConfigError(f"lambda0 must have length {p.m}")
        lam = project_multipliers(lam, p.senses)

        try:
            q0, sol0 = evaluate_dual(p, lam)
        except InfeasibleSubproblem:
            return self._finish(INFEASIBLE, lam)
        cur = SurrogateSolution.build(p, sol0, lam, [0] * p.n_sub, exact=True)
        self.note_dual(q0, lam)
        if self.method in ("slr", "savlr", "slblr") or cfg.repair_interval:
            self.try_repair(cur.solution)
            if self.ub is None and self.shape is None and self.method in ("slr", "savlr", "slblr"):
                try:
                    rep = repair_via_penalty(p, lam)
                    self.repairs += 1
                    self.note_feasible(rep.solution, rep.cost)
                except (RepairFailed, InfeasibleSubproblem):
                    pass
        else:
            self.note_feasible(cur.solution)
        self._init_strategy(q0, cur)

        k = 0
        solved = p.n_sub
        events = ["init"]
        q_exact: Optional[float] = q0
        while True:
            if cfg.keep_history:
                self.history.append({"k": k, "lam": lam.copy(), "g": cur.g.copy(), "L": cur.L,
                                     "q_exact": q_exact, "exact": cur.exact,
                                     "solution": cur.solution, "stamps": list(cur.stamps)})
            status = None
            if not np.any(cur.g) and not cur.exact and self.method != "incremental":
                # a coupling-feasible surrogate proves nothing; look at the exact minimizer
                q_exact, exact_sol = evaluate_dual(p, lam)
                solved += p.n_sub
                self.note_dual(q_exact, lam)
                cur = SurrogateSolution.build(p, exact_sol, lam, [k] * p.n_sub, exact=True)
                events.append("exact-fallback")
            if not np.any(cur.g) and cur.exact:
                status = OPTIMAL
            elif self.gap_met():
                status = GAP_MET
            elif k >= cfg.max_iter:
                status = MAX_ITER

            decision = None
            if status is None:
                decision = self._step(k, lam, cur, q_exact, events)
                if decision.stepsize < cfg.step_floor and decision.note not in ("hold",):
                    status = STEP_FLOOR
            rec = TraceRecord(
                k=k, method=self.method, L_surrogate=cur.L, q_exact=q_exact, q_rec=self.q_rec,
                level=None if decision is None else decision.level,
                stepsize=None if decision is None else decision.stepsize,
                g_norm=float(np.linalg.norm(cur.g)), subsystems_solved=solved,
                feasible_cost=self.ub, wall_ms=self.wall_ms(), event=";".join(events))
            if cfg.keep_history:
                self.history[-1]["step"] = None if decision is None else decision.stepsize
            self.trace.append(rec)
            if status is not None:
                return self._finish(status, lam)

            events = []
            s = decision.stepsize
            try:
                if self.method == "incremental":
                    lam_next, inc_sol = incremental_pass(p, lam, s)
                    solved = p.n_sub
                else:
                    lam_next = project_multipliers(lam + s * cur.g, p.senses)
            except InfeasibleSubproblem:
                return self._finish(INFEASIBLE, lam)
            self.last_move = float(np.linalg.norm(lam_next - lam))
            if self.method == "slblr":
                self._after_slblr_step(k, s, cur, lam_next, events)
            k += 1
            lam = lam_next

            try:
                cur, solved, held = self._next_solution(k, lam, cur, events)
                if self.method == "incremental":
                    cur = SurrogateSolution.build(p, inc_sol, lam, [k] * p.n_sub)
                    solved = p.n_sub
            except InfeasibleSubproblem:
                return self._finish(INFEASIBLE, lam)
            if self.method == "savlr":
                rho = self.savlr.update_rho(held)
                if not held:
                    events.append(f"rho-down:{rho:.6g}")

            q_exact = None
            if cur.exact:
                q_exact = cur.L
                self.note_dual(q_exact, lam)
            elif cfg.exact_interval and k % cfg.exact_interval == 0:
                q_exact, _ = evaluate_dual(p, lam)
                self.note_dual(q_exact, lam)
            if not np.any(cur.g):
                self.note_feasible(cur.solution)
            if cfg.repair_interval and k % cfg.repair_interval == 0:
                if self.try_repair(cur.solution):
                    events.append("repair")

    # -- per-method pieces -----------------------------------------------

    def _init_strategy(self, q0: float, cur: SurrogateSolution):
        cfg = self.cfg
        g0 = float(np.linalg.norm(cur.g))
        if self.method == "level":
            self.level = st.LevelMethodState(q0, cfg.level_delta, cfg.level_path_budget,
                                             cfg.level_beta, cfg.level_tau, cfg.level_gamma)
        if self.method in ("slr", "savlr", "slblr"):
            target = self.ub
            if target is None:
                target = primal_cost_bound(self.p, self.shape)
            if target <= q0:
                target = q0 + max(1.0, 0.1 * abs(q0))
            self.s0 = (target - q0) / g0 ** 2 if g0 > 0 else 0.0
            self.slr = None
        if self.method == "savlr":
            rho0 = default_rho0(self.p) if cfg.savlr_rho0 is None else cfg.savlr_rho0
            self.savlr = st.SavlrState(None, rho0, cfg.savlr_beta, cfg.savlr_cooldown)
        if self.method == "slblr":
            self.slblr = st.SlblrParams(cfg.slblr_gamma, cfg.slblr_zeta)
            self.window = IterateWindow()
            self.window.reset(0, np.zeros(self.p.m) if cfg.lambda0 is None
                              else project_multipliers(cfg.lambda0, self.p.senses))

    def _slr_step(self, k: int, cur: SurrogateSolution) -> st.StepDecision:
        g_norm = float(np.linalg.norm(cur.g))
        if self.slr is None:
            self.slr = st.SlrState(self.s0, g_norm, self.cfg.slr_M, self.cfg.slr_r)
            if self.method == "savlr":
                self.savlr.slr = self.slr
            return st.StepDecision(self.s0)
        return self.slr.step(g_norm, prev_move=self.last_move)

    def _step(self, k: int, lam, cur: SurrogateSolution, q_exact, events) -> st.StepDecision:
        cfg, m = self.cfg, self.method
        if m in ("subgradient", "incremental"):
            return st.non_summable_step(k + 1, cfg.nonsummable_a, cfg.nonsummable_b)
        if m == "polyak":
            return st.polyak_step(st.PolyakParams(self.q_star, cfg.polyak_gamma), q_exact, cur.g)
        if m == "level":
            d = self.level.step(q_exact, cur.g, self.last_move)
            if d.note:
                events.append(d.note)
            return d
        if m in ("surrogate", "interleaved"):
            if self.q_star is None:
                return st.non_summable_step(k + 1, cfg.nonsummable_a, cfg.nonsummable_b)
            try:
                return st.surrogate_polyak_step(st.PolyakParams(self.q_star, cfg.surrogate_gamma),
                                                cur.L, cur.g)
            except st.LevelViolation:
                events.append("level-hold")
                return st.StepDecision(0.0, level=self.q_star, note="hold")
        if m in ("slr", "savlr"):
            return self._slr_step(k, cur)
        if m == "slblr":
            return self._slblr_step(k, lam, cur, events)
        raise ConfigError(m)

    def _slblr_step(self, k, lam, cur, events) -> st.StepDecision:
        if self.slblr.level is None:
            d = self._slr_step(k, cur)
            return st.StepDecision(d.stepsize, note="bootstrap")
        try:
            return st.slblr_step(self.slblr, cur.L, cur.g)
        except st.LevelViolation:
            pass
        # level no longer above the surrogate value: ask the detector right away
        if self.window.n_halfspaces and self._window_infeasible(events):
            self._emit_level(k, lam, events)
            try:
                return st.slblr_step(self.slblr, cur.L, cur.g)
            except st.LevelViolation:
                pass
        events.append("level-hold")
        return st.StepDecision(0.0, level=self.slblr.level, note="hold")

    def _window_infeasible(self, events) -> bool:
        try:
            return not self.window.check().feasible
        except DetectorInconclusive:
            # within round-off of the boundary: keep the current level
            self.inconclusive += 1
            events.append("detector-inconclusive")
            return False

    def _emit_level(self, k, lam, events):
        w = self.window
        n_j = w.n_halfspaces
        level = on_infeasible(w, self.slblr.gamma, k, lam)
        self.slblr.level = level
        self.slblr.j += 1
        self.detections.append({"k": k, "j": self.slblr.j, "n": n_j, "level": level})
        events.append(f"detection:{self.slblr.j}")

    def _after_slblr_step(self, k, s, cur, lam_next, events):
        w = self.window
        w.add_record(StepRecord(s, float(cur.g @ cur.g), cur.L))
        w.push(lam_next)
        if self._window_infeasible(events):
            self._emit_level(k + 1, lam_next, events)
        elif len(w.iterates) >= self.cfg.window_cap:
            w.reset(k + 1, lam_next)
            events.append("window-cap")

    def _next_solution(self, k, lam, cur: SurrogateSolution, events):
        p, m = self.p, self.method
        if m in EXACT_METHODS:
            q, sol = evaluate_dual(p, lam)
            return SurrogateSolution.build(p, sol, lam, [k] * p.n_sub, exact=True), p.n_sub, True
        if m == "incremental":
            return cur, 0, True
        if m == "interleaved":
            i = self.cursor
            part = solve_subproblem(p.subsystems[i], lam)
            stamps = list(cur.stamps)
            stamps[i] = k
            self.cursor = (i + 1) % p.n_sub
            return SurrogateSolution.build(p, cur.solution.replace(i, part), lam, stamps), 1, True
        rho = 0.0
        if m == "savlr":
            rho = self.savlr.rho
        elif m == "slblr":
            rho = self.cfg.slblr_rho
        nxt, self.cursor, solves, held = surrogate_iterate(p, lam, cur, self.cursor, k, rho)
        if not held:
            events.append("empty-S")
        return nxt, solves, held

    def _finish(self, status: str, lam) -> RunResult:
        summary = {
            "status": status,
            "method": self.method,
            "iterations": max(0, len(self.trace) - 1),
            "q_rec": self.q_rec,
            "q_star": self.q_star,
            "best_feasible_cost": self.ub,
            "detections": len(self.detections),
            "detector_inconclusive": self.inconclusive,
            "repairs": self.repairs,
        }
        res = RunResult(self.trace, status, np.asarray(lam), self.q_rec, self.best_lambda,
                        self.best_feasible, self.ub, self.q_star, self.lam_hat,
                        self.detections, self.repairs, self.history)
        summary["dual_gap"] = res.dual_gap
        summary["final_gap"] = res.final_gap
        self.trace.summary = summary
        return res


def run(problem: SeparableMilp, method: Optional[str] = None,
        config: Optional[RunConfig] = None, **overrides) -> RunResult:
    """Run one method to a stopping rule and return its trace and bounds."""
    cfg = dataclasses.replace(config or RunConfig(), **overrides)
    if method is not None:
        cfg = dataclasses.replace(cfg, method=method)
    return _Run(problem, cfg).run()


def exit_status(result: RunResult) -> int:
    if result.status == INFEASIBLE:
        return 3
    if result.status == MAX_ITER:
        return 2
    return 0


__all__ = ["RunConfig", "RunResult", "SurrogateSolution", "DualIterate", "run",
           "surrogate_condition_holds", "surrogate_iterate", "incremental_pass",
           "evaluate_dual", "compute_dual_optimum", "METHODS", "ConfigError", "exit_status"]
