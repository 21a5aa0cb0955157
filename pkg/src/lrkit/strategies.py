"""Stepsize and level rules for multiplier updates.

Stateless rules are plain functions; rules that carry memory between
iterations (level method, SLR, SAVLR penalty schedule) are small mutable
state objects owned by exactly one engine run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .detector import level_from_records


class ZeroSubgradient(ArithmeticError):
    """The subgradient vanished; for exact subgradients this proves dual optimality."""


class LevelViolation(ValueError):
    """The target value does not exceed the current Lagrangian value."""


@dataclass
class StepDecision:
    stepsize: float
    level: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        if not math.isfinite(self.stepsize) or self.stepsize < 0:
            raise ValueError(f"invalid stepsize {self.stepsize}")


def _norm_sq(g) -> float:
    g = np.asarray(g, dtype=float)
    n2 = float(g @ g)
    if n2 == 0.0:
        raise ZeroSubgradient("zero subgradient")
    return n2


def non_summable_step(k: int, a: float = 1.0, b: float = 0.0) -> StepDecision:
    """``a / (b + k)``: positive, vanishing, with divergent partial sums."""
    if k < 1:
        raise ValueError("iteration index starts at 1")
    if a <= 0 or b < 0:
        raise ValueError("need a > 0 and b >= 0")
    return StepDecision(a / (b + k))


@dataclass
class PolyakParams:
    q_star: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma < 2:
            raise ValueError("Polyak gamma must lie in (0, 2)")


def polyak_step(p: PolyakParams, qk: float, g) -> StepDecision:
    n2 = _norm_sq(g)
    return StepDecision(max(0.0, p.gamma * (p.q_star - qk) / n2), level=p.q_star)


SURROGATE_FRACTION = 0.5


def surrogate_polyak_step(p: PolyakParams, L: float, g) -> StepDecision:
    """Midpoint of the open interval ``(0, gamma (q* - L) / ||g||^2)``."""
    if p.gamma >= 1:
        raise ValueError("surrogate gamma must be below 1")
    n2 = _norm_sq(g)
    if L >= p.q_star:
        raise LevelViolation(f"surrogate value {L} is not below the optimal dual value {p.q_star}")
    return StepDecision(SURROGATE_FRACTION * p.gamma * (p.q_star - L) / n2, level=p.q_star)


class LevelMethodState:
    """Record/level bookkeeping of the subgradient-level method.

    The level is ``record at the last reset + delta``.  Sufficient ascent
    (``q >= record + tau * delta``) re-anchors the level and clears the path
    length; travelling more than ``path_budget`` without it shrinks ``delta``
    by ``beta``.
    """

    def __init__(self, q0: float, delta: Optional[float] = None, path_budget: Optional[float] = None,
                 beta: float = 0.5, tau: float = 0.5, gamma: float = 1.0):
        if not (0 < beta < 1 and 0 < tau < 1):
            raise ValueError("beta and tau must lie in (0, 1)")
        if not 0 < gamma < 2:
            raise ValueError("gamma must lie in (0, 2)")
        self.q_rec = q0
        self.anchor = q0
        self.delta = max(1.0, 0.1 * abs(q0)) if delta is None else float(delta)
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        self.path_budget = path_budget
        self.path_length = 0.0
        self.beta, self.tau, self.gamma = beta, tau, gamma
        self.j = 0

    @property
    def level(self) -> float:
        return self.anchor + self.delta

    def step(self, qk: float, g, last_move: float = 0.0) -> StepDecision:
        n2 = _norm_sq(g)
        self.path_length += last_move
        note = ""
        if qk >= self.anchor + self.tau * self.delta:
            self.path_length = 0.0
            self.anchor = max(self.q_rec, qk)
            note = "ascent"
        elif self.path_budget is not None and self.path_length > self.path_budget:
            self.delta *= self.beta
            self.path_length = 0.0
            self.anchor = max(self.q_rec, qk)
            self.j += 1
            note = "delta-shrink"
        self.q_rec = max(self.q_rec, qk)
        level = self.level
        s = self.gamma * (level - qk) / n2
        if self.path_budget is None:
            self.path_budget = 10.0 * s * math.sqrt(n2)
        return StepDecision(s, level=level, note=note)


def slr_alpha(k: int, M: float = 25.0, r: float = 0.05) -> float:
    """``1 - 1 / (M k^(1 - 1/k^r))`` clamped to [0, 1]."""
    if k < 1:
        raise ValueError("iteration index starts at 1")
    alpha = 1.0 - 1.0 / (M * k ** (1.0 - 1.0 / k ** r))
    return min(1.0, max(0.0, alpha))


class SlrState:
    """Contraction stepsizes ``s^k = alpha_k s^{k-1} ||g^{k-1}|| / ||g^k||``.

    ``prev_move`` may override ``s^{k-1} ||g^{k-1}||`` with the distance the
    multipliers actually moved, which matters once projection shortens a step.
    """

    def __init__(self, s0: float, g0_norm: float, M: float = 25.0, r: float = 0.05):
        if M < 1 or not 0 <= r <= 1:
            raise ValueError("need M >= 1 and 0 <= r <= 1")
        if s0 <= 0 or g0_norm <= 0:
            raise ValueError("bootstrap step and subgradient norm must be positive")
        self.prev_step = s0
        self.prev_grad_norm = g0_norm
        self.M, self.r = M, r
        self.k = 0

    def step(self, g_norm: float, prev_move: Optional[float] = None) -> StepDecision:
        if g_norm <= 0:
            raise ZeroSubgradient("zero subgradient")
        self.k += 1
        alpha = slr_alpha(self.k, self.M, self.r)
        move = self.prev_step * self.prev_grad_norm if prev_move is None else prev_move
        s = alpha * move / g_norm
        self.prev_step, self.prev_grad_norm = s, g_norm
        return StepDecision(s)


class SavlrState:
    """SLR stepsizes plus the multiplicative schedule of the absolute-value penalty."""

    def __init__(self, slr: SlrState, rho: float, beta_rho: float = 1.5, cooldown: int = 5):
        if rho < 0 or beta_rho <= 1:
            raise ValueError("need rho >= 0 and beta_rho > 1")
        self.slr = slr
        self.rho = rho
        self.beta_rho = beta_rho
        self.cooldown = cooldown
        self._hold = 0

    def update_rho(self, condition_held: bool) -> float:
        if not condition_held:
            self.rho /= self.beta_rho
            self._hold = self.cooldown
        elif self._hold > 0:
            self._hold -= 1
        else:
            self.rho *= self.beta_rho
        return self.rho


@dataclass
class SlblrParams:
    gamma: float = 0.5
    zeta: float = 0.95
    level: Optional[float] = None
    j: int = 0

    def __post_init__(self):
        if not (0 < self.gamma < 1 and 0 < self.zeta < 1):
            raise ValueError("gamma and zeta must lie in (0, 1)")


def slblr_step(p: SlblrParams, L: float, g) -> StepDecision:
    """``zeta * gamma * (level - L) / ||g||^2``."""
    n2 = _norm_sq(g)
    if p.level is None or p.level <= L:
        raise LevelViolation(f"level {p.level} does not exceed the surrogate value {L}")
    return StepDecision(p.zeta * p.gamma * (p.level - L) / n2, level=p.level)


def slblr_level_from_window(records, gamma: float) -> float:
    return level_from_records(records, gamma)
