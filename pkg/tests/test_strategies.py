import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from lrkit.detector import StepRecord
from lrkit.strategies import (LevelMethodState, LevelViolation, PolyakParams, SavlrState,
                              SlblrParams, SlrState, StepDecision, ZeroSubgradient,
                              non_summable_step, polyak_step, slblr_level_from_window, slblr_step,
                              slr_alpha, surrogate_polyak_step)


def test_step_decision_rejects_bad_steps():
    for bad in (-1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            StepDecision(bad)


def test_non_summable_values():
    assert non_summable_step(1).stepsize == 1
    assert non_summable_step(100).stepsize == pytest.approx(0.01)
    assert sum(non_summable_step(k).stepsize for k in range(1, 10 ** 4 + 1)) > 9
    with pytest.raises(ValueError):
        non_summable_step(0)


def test_polyak_examples():
    assert polyak_step(PolyakParams(1.0), 1.0, [1, 0]).stepsize == 0
    assert polyak_step(PolyakParams(1.0), 0.0, [1, 0]).stepsize == 1
    with pytest.raises(ZeroSubgradient):
        polyak_step(PolyakParams(1.0), 0.0, [0, 0])
    with pytest.raises(ValueError):
        PolyakParams(1.0, gamma=2.0)


def test_surrogate_polyak_examples():
    p = PolyakParams(2.0, gamma=0.9)
    assert surrogate_polyak_step(p, 0.0, [1, 1]).stepsize == pytest.approx(0.45)
    with pytest.raises(LevelViolation):
        surrogate_polyak_step(p, 2.0, [1, 1])
    with pytest.raises(ValueError):
        surrogate_polyak_step(PolyakParams(2.0, gamma=1.0), 0.0, [1, 1])


def test_level_sufficient_ascent_resets_path():
    st = LevelMethodState(0.0, delta=2.0, path_budget=100.0)
    st.step(0.0, [1.0], last_move=5.0)
    assert st.path_length == 5.0
    d = st.step(st.q_rec + st.delta, [1.0], last_move=1.0)
    assert d.note == "ascent"
    assert st.path_length == 0 and st.delta == 2.0


def test_level_path_budget_halves_delta():
    st = LevelMethodState(0.0, delta=2.0, path_budget=3.0)
    d = st.step(0.0, [1.0], last_move=4.0)
    assert d.note == "delta-shrink" and st.delta == 1.0 and st.j == 1


def test_level_default_delta_and_budget():
    st = LevelMethodState(-50.0)
    assert st.delta == 5.0
    d = st.step(-50.0, [3.0, 4.0])
    assert st.path_budget == pytest.approx(10 * d.stepsize * 5.0)


@given(hs.lists(hs.tuples(hs.floats(-10, 10), hs.floats(0, 5)), min_size=1, max_size=40))
def test_level_bookkeeping(seq):
    st = LevelMethodState(0.0, delta=1.0, path_budget=2.0)
    prev_rec = st.q_rec
    for q, move in seq:
        budget_hit = st.path_length + move > st.path_budget
        delta_before = st.delta
        d = st.step(q, [1.0, 1.0], move)
        assert st.q_rec >= prev_rec and st.delta > 0 and st.path_length >= 0
        if st.delta < delta_before:
            assert budget_hit and d.note == "delta-shrink"
        prev_rec = st.q_rec


def test_slr_alpha_values():
    for r in (0.0, 0.05, 1.0):
        assert slr_alpha(1, 25, r) == pytest.approx(1 - 1 / 25)
    assert slr_alpha(1, 1, 0.05) == 0
    assert slr_alpha(10 ** 4, 25, 0.05) > 0.99


def test_slr_step_examples():
    st = SlrState(0.5, 2.0, M=25)
    st.M = 1e300  # alpha ~ 1
    assert st.step(2.0).stepsize == pytest.approx(0.5)
    st = SlrState(0.5, 2.0, M=1)
    assert st.step(2.0).stepsize == 0
    with pytest.raises(ZeroSubgradient):
        SlrState(0.5, 2.0).step(0.0)


def test_slr_step_contracts():
    st = SlrState(1.0, 3.0)
    prev = 3.0
    rng = np.random.default_rng(1)
    for k in range(1, 200):
        g = float(rng.uniform(0.1, 5))
        s = st.step(g).stepsize
        assert s * g <= slr_alpha(k) * prev + 1e-12
        prev = s * g


def test_savlr_rho_rule():
    st = SavlrState(None, 1.0, beta_rho=2.0, cooldown=0)
    assert st.update_rho(True) == 2.0
    assert st.update_rho(False) == 1.0


def test_savlr_bounded_oscillation():
    # strict alternation without cooldown swings between rho0 and 2 rho0
    st = SavlrState(None, 1.0, beta_rho=2.0, cooldown=0)
    rhos = [st.update_rho(i % 2 == 0) for i in range(200)]
    assert min(rhos) == 1.0 and max(rhos) == 2.0
    # with cooldown c, alternating phases (one violation, then c + 1 held steps)
    # return to rho0 every cycle
    c = 5
    st = SavlrState(None, 1.0, beta_rho=2.0, cooldown=c)
    rhos = [st.update_rho(held) for _ in range(30) for held in [False] + [True] * (c + 1)]
    assert min(rhos) >= 1.0 / 2 ** c and max(rhos) <= 2.0 ** c
    assert rhos[-1] == 1.0


def test_savlr_cooldown_suspends_growth():
    st = SavlrState(None, 4.0, beta_rho=2.0, cooldown=3)
    assert st.update_rho(False) == 2.0
    assert [st.update_rho(True) for _ in range(4)] == [2.0, 2.0, 2.0, 4.0]


def test_slblr_step_examples():
    p = SlblrParams(gamma=0.5, zeta=0.5, level=2.0)
    assert slblr_step(p, 0.0, [1, 1]).stepsize == pytest.approx(0.25)
    with pytest.raises(LevelViolation):
        slblr_step(p, 2.0, [1, 1])
    with pytest.raises(ValueError):
        SlblrParams(gamma=1.0)


def test_level_from_window_examples():
    assert slblr_level_from_window([StepRecord(1.0, 1.0, 0.0)], 1.0) == 1
    recs = [StepRecord(1.0, 1.0, 0.0), StepRecord(1.0, 2.0, 1.0)]
    assert slblr_level_from_window(recs, 1.0) == 3
    with pytest.raises(ValueError):
        slblr_level_from_window([], 1.0)
