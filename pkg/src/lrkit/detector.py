"""Multiplier divergence detection.

Every pair of consecutive multiplier iterates ``a -> b`` contributes the
halfspace ``||lam - b|| <= ||lam - a||``, i.e. ``2 (a - b) . lam <= ||a||^2 - ||b||^2``.
When the accumulated system becomes empty no point is getting closer to every
new iterate, which certifies that the current level overshoots the dual optimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .simplex import INFEASIBLE, OPTIMAL, simplex_standard

VERIFY_TOL = 1e-9


class WindowError(ValueError):
    pass


class DetectorInconclusive(ArithmeticError):
    """The system sits within round-off of the feasibility boundary."""


def linearize_pair(earlier, later) -> tuple[np.ndarray, float]:
    """Halfspace (normal, offset) for 'closer to ``later`` than to ``earlier``'."""
    a = np.asarray(earlier, dtype=float)
    b = np.asarray(later, dtype=float)
    if a.shape != b.shape:
        raise WindowError(f"iterate shapes differ: {a.shape} vs {b.shape}")
    # (a - b).(a + b) equals |a|^2 - |b|^2 without cancellation for nearby iterates
    return 2.0 * (a - b), float((a - b) @ (a + b))


@dataclass
class StepRecord:
    """Quantities of one multiplier step used to form a level candidate."""

    stepsize: float
    g_norm_sq: float
    lagrangian: float

    def level_candidate(self, gamma: float) -> float:
        return self.stepsize * self.g_norm_sq / gamma + self.lagrangian


@dataclass
class FeasibilityVerdict:
    witness: Optional[np.ndarray] = None
    certificate: Optional[np.ndarray] = None

    @property
    def feasible(self) -> bool:
        return self.witness is not None


def _row_scale(G: np.ndarray) -> np.ndarray:
    # unit normals make every tolerance a distance in multiplier space
    norms = np.linalg.norm(G, axis=1)
    return np.where(norms > 0, norms, 1.0)


def verify_witness(G, h, lam, tol: float = VERIFY_TOL) -> bool:
    G = np.asarray(G, dtype=float)
    slack = (G @ lam - h) / _row_scale(G)
    return bool(np.all(slack <= tol))


def verify_certificate(G, h, y, tol: float = VERIFY_TOL) -> bool:
    """Check ``y >= 0``, ``y G = 0`` and ``y h < 0`` relative to the size of ``y``."""
    G = np.asarray(G, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        return False
    scale = _row_scale(G)
    ys = y * scale
    total = float(ys.sum())
    if total <= 0:
        return False
    combo = y @ G
    return bool(np.max(np.abs(combo), initial=0.0) <= tol * total and y @ h <= -tol * total)


def _row_space(Gs: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    # only the span of the normals matters; dropping near-null directions keeps
    # the simplex bases well conditioned when iterates are almost collinear
    _, sv, vt = np.linalg.svd(Gs, full_matrices=False)
    if len(sv) == 0 or sv[0] == 0:
        return np.zeros((Gs.shape[1], 0))
    return vt[sv > rel_tol * sv[0]].T


def check_feasibility(G, h) -> FeasibilityVerdict:
    """Decide ``{lam : G lam <= h}`` by phase-1 simplex and self-verify the answer."""
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    if G.shape[0] == 0:
        raise WindowError("no halfspaces to check")
    k = G.shape[0]
    scale = _row_scale(G)
    Gs = G / scale[:, None]
    hs = h / scale
    V = _row_space(Gs)
    Gz = Gs @ V
    r = Gz.shape[1]
    # shift to a least-squares center so the LP sees step-sized offsets, not |lam|-sized ones
    center = V @ np.linalg.lstsq(Gz, hs, rcond=None)[0]
    hs = hs - Gs @ center
    # z = u - v, slack s:  Gz u - Gz v + s = hs
    A = np.hstack([Gz, -Gz, np.eye(k)])
    res = simplex_standard(np.zeros(2 * r + k), A, hs)
    if res.status == INFEASIBLE:
        y = np.maximum(-res.farkas, 0.0) / scale
        y /= y.max()
        if verify_certificate(G, h, y):
            return FeasibilityVerdict(certificate=y)
    else:
        lam = center + V @ (res.x[:r] - res.x[r:2 * r])
        if verify_witness(G, h, lam):
            return FeasibilityVerdict(witness=lam)
    # near-parallel rows can defeat phase 1; the least-violation LP gives the
    # widest-margin answer either way
    lv = _least_violation(Gz, hs)
    if lv is not None:
        z, t, y = lv
        lam = center + V @ z
        if verify_witness(G, h, lam):
            return FeasibilityVerdict(witness=lam)
        if t > 0 and y.max() > 0:
            y = y / scale
            y /= y.max()
            if verify_certificate(G, h, y):
                return FeasibilityVerdict(certificate=y)
    raise DetectorInconclusive("neither a witness nor a certificate verified")


def _least_violation(Gz, hs):
    """Minimize the largest violation t of ``Gz z <= hs`` subject to ``t >= -1``.

    Returns ``(z, t, y)`` where ``y >= 0`` are the row prices; when ``t > 0``
    they satisfy ``y Gz = 0``, ``sum(y) = 1`` and ``y . hs = -t``, which is the
    widest-margin infeasibility proof.
    """
    k, r = Gz.shape
    # columns [u (r), v (r), t' = t + 1, slack (k)]:  Gz u - Gz v - t' + s = hs - 1
    A = np.hstack([Gz, -Gz, -np.ones((k, 1)), np.eye(k)])
    c = np.zeros(2 * r + 1 + k)
    c[2 * r] = 1.0
    res = simplex_standard(c, A, hs - 1.0)
    if res.status != OPTIMAL or res.duals is None:
        return None
    z = res.x[:r] - res.x[r:2 * r]
    return z, res.x[2 * r] - 1.0, np.maximum(-res.duals, 0.0)


@dataclass
class IterateWindow:
    """Multiplier iterates since the last reset together with their halfspaces."""

    anchor: int = 0
    iterates: list = field(default_factory=list)
    normals: list = field(default_factory=list)
    offsets: list = field(default_factory=list)
    records: list = field(default_factory=list)
    _witness: Optional[np.ndarray] = None

    def push(self, lam) -> "IterateWindow":
        lam = np.array(lam, dtype=float)
        if self.iterates:
            normal, offset = linearize_pair(self.iterates[-1], lam)
            self.normals.append(normal)
            self.offsets.append(offset)
        self.iterates.append(lam)
        return self

    def add_record(self, record: StepRecord):
        self.records.append(record)

    @property
    def n_halfspaces(self) -> int:
        return len(self.normals)

    def system(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.normals), np.array(self.offsets)

    def check(self) -> FeasibilityVerdict:
        """Feasibility of the window, reusing the previous witness when it still fits."""
        G, h = self.system()
        for cand in self._cheap_candidates():
            if verify_witness(G, h, cand):
                self._witness = cand
                return FeasibilityVerdict(witness=cand)
        verdict = check_feasibility(G, h)
        self._witness = verdict.witness
        return verdict

    def _cheap_candidates(self):
        # the last witness, then points ahead along the window's net drift;
        # any of them that verifies is as good as an LP answer
        if self._witness is not None:
            yield self._witness
        last = self.iterates[-1]
        drift = last - self.iterates[0]
        if np.any(drift):
            for factor in (1.0, 10.0, 100.0):
                yield last + factor * drift

    def reset(self, anchor: int, lam) -> "IterateWindow":
        self.anchor = anchor
        self.iterates = []
        self.normals = []
        self.offsets = []
        self.records = []
        self._witness = None
        return self.push(lam)


def level_from_records(records, gamma: float) -> float:
    """Largest level candidate ``s ||g||^2 / gamma + L`` over a window."""
    if not records:
        raise WindowError("empty window has no level")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return max(r.level_candidate(gamma) for r in records)


def on_infeasible(window: IterateWindow, gamma: float, k: int, lam) -> float:
    """Emit the new level from the window and re-anchor it at iterate ``k``."""
    level = level_from_records(window.records, gamma)
    window.reset(k, lam)
    return level
