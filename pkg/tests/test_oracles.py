import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

import reference as ref
from lrkit.model import GE, LE, BoundedPolyhedron, KnapsackSet, Subsystem, SubsystemSolution
from lrkit.oracles import (EnumerationCapExceeded, InfeasibleSubproblem, PenaltyContext,
                           branch_and_bound, brute_force_enumerate, knapsack_dp,
                           penalized_objective, solve_penalized_with_value, solve_subproblem,
                           solve_subproblem_penalized, subproblem_objective)


def binary_sub(cost, A=None, weights=None, cap=None):
    cost = np.atleast_1d(np.asarray(cost, float))
    n = len(cost)
    A = np.ones((1, n)) if A is None else np.asarray(A, float)
    ls = KnapsackSet(np.zeros(n, int) if weights is None else weights, n if cap is None else cap)
    return Subsystem(cost, [], A, np.zeros((A.shape[0], 0)), ls)


# knapsack -------------------------------------------------------------------

def test_knapsack_capacity_zero():
    sel, obj = knapsack_dp([1, 2], [5, 6], 0)
    assert not sel.any() and obj == 0


def test_knapsack_two_items():
    sel, obj = knapsack_dp([2, 3], [3, 4], 5)
    assert sel.tolist() == [True, True] and obj == 7


def test_knapsack_ties_pick_lexicographically_smallest():
    sel, _ = knapsack_dp([1, 1], [1, 1], 1)
    assert sel.tolist() == [False, True]
    sel, _ = knapsack_dp([1, 1], [0, 0], 2)
    assert not sel.any()


def test_knapsack_twelve_items():
    rng = np.random.default_rng(12)
    w = rng.integers(1, 10, 12)
    p = rng.integers(1, 20, 12).astype(float)
    cap = int(w.sum() // 2)
    sel, obj = knapsack_dp(w, p, cap)
    assert obj == ref.knapsack_best(w, p, cap)
    assert w[sel].sum() <= cap and p[sel].sum() == obj


@settings(max_examples=40, deadline=None)
@given(hs.lists(hs.tuples(hs.integers(0, 9), hs.floats(-10, 10)), min_size=0, max_size=15),
       hs.integers(0, 40))
def test_knapsack_matches_subsets(items, cap):
    w = np.array([a for a, _ in items], dtype=int)
    p = np.array([b for _, b in items], dtype=float)
    sel, obj = knapsack_dp(w, p, cap)
    assert obj == pytest.approx(ref.knapsack_best(w, p, cap), abs=1e-9)
    assert w[sel].sum() <= cap


# subproblems ----------------------------------------------------------------

def test_nonnegative_costs_choose_nothing():
    sub = binary_sub([1, 0, 3], weights=[1, 1, 1], cap=2)
    assert solve_subproblem(sub, [0.0]).x.tolist() == [0, 0, 0]


def test_negative_cost_sets_variable():
    sub = binary_sub([-3])
    assert solve_subproblem(sub, [0.0]).x.tolist() == [1]


def test_t1_machine_subproblem(t1_problem):
    sub = t1_problem.subsystems[0]
    lam = np.array([1.0, 1.0])
    pts = list(itertools.product((0, 1), repeat=2))
    feasible = [p for p in pts if sum(p) <= 1]
    best = min(feasible, key=lambda p: (ref.T1_COSTS[0] @ p + lam @ p, p))
    assert tuple(solve_subproblem(sub, lam).x) == best


def test_empty_local_set_raises():
    poly = BoundedPolyhedron([[1.0]], [5.0], (GE,), [0], [1])
    sub = Subsystem([1.0], [], [[1.0]], np.zeros((1, 0)), poly)
    with pytest.raises(InfeasibleSubproblem):
        solve_subproblem(sub, [0.0])
    assert brute_force_enumerate(sub) == []


def test_penalty_off_matches_plain():
    rng = np.random.default_rng(3)
    for seed in range(10):
        p = ref.random_problem(seed)
        lam = rng.normal(size=p.m)
        for sub in p.subsystems:
            ctx = PenaltyContext(0.0, rng.normal(size=p.m))
            assert solve_subproblem_penalized(sub, lam, ctx) == solve_subproblem(sub, lam)


def test_penalty_two_case():
    sub = binary_sub([0.0])
    ctx = PenaltyContext(5.0, [-1.0])
    assert solve_subproblem_penalized(sub, [0.0], ctx).x.tolist() == [1]


def test_penalty_t1_against_enumeration(t1_problem):
    lam = np.array([0.5, -0.25])
    other = t1_problem.subsystems[1]
    fixed = SubsystemSolution(np.array([0.0, 1.0]))
    resid = other.int_coupling @ fixed.x - t1_problem.rhs
    sub = t1_problem.subsystems[0]
    cand, value = solve_penalized_with_value(sub, lam, PenaltyContext(2.0, resid))
    assert value == pytest.approx(ref.sub_penalized_min(sub, lam, 2.0, resid), abs=1e-12)
    assert sub.is_local_feasible(cand)


def test_penalty_context_checks():
    with pytest.raises(ValueError):
        PenaltyContext(-1.0, [0.0])


# branch and bound -----------------------------------------------------------

def test_bb_fixed_point():
    poly = BoundedPolyhedron(np.zeros((0, 3)), [], (), [1, -2, 0], [1, -2, 0])
    sub = Subsystem([1.0, 2.0, 3.0], [], np.zeros((1, 3)), np.zeros((1, 0)), poly)
    assert branch_and_bound(sub).x.tolist() == [1, -2, 0]


def test_bb_single_binary():
    poly = BoundedPolyhedron(np.zeros((0, 1)), [], (), [0], [1])
    sub = Subsystem([-1.0], [], np.zeros((1, 1)), np.zeros((1, 0)), poly)
    assert branch_and_bound(sub).x.tolist() == [1]


def test_bb_eight_variables():
    rng = np.random.default_rng(8)
    n = 8
    mat = rng.integers(-3, 4, (3, n)).astype(float)
    plant = rng.integers(0, 3, n)
    poly = BoundedPolyhedron(mat, mat @ plant + 1, (LE, LE, LE), np.zeros(n), np.full(n, 2.0))
    cost = rng.integers(-5, 6, n).astype(float)
    sub = Subsystem(cost, [], np.zeros((1, n)), np.zeros((1, 0)), poly)
    got = branch_and_bound(sub)
    expect = min(((float(cost @ x), tuple(x)) for x in ref.int_points(sub)))
    assert (float(cost @ got.x), tuple(got.x)) == expect


def test_bb_mixed_against_enumeration():
    rng = np.random.default_rng(21)
    for _ in range(10):
        sub = ref.random_polyhedron_sub(rng, 2, n_int=3, n_cont=2, integer_data=False)
        lam = rng.normal(size=2)
        got = solve_subproblem(sub, lam)
        assert subproblem_objective(sub, lam, got) == pytest.approx(ref.sub_min(sub, lam), abs=1e-9)
        assert sub.is_local_feasible(got)


# enumeration ----------------------------------------------------------------

def test_enumerate_one_binary():
    poly = BoundedPolyhedron(np.zeros((0, 1)), [], (), [0], [1])
    sub = Subsystem([0.0], [], np.zeros((1, 1)), np.zeros((1, 0)), poly)
    assert [p.key() for p in brute_force_enumerate(sub)] == [(0,), (1,)]


def test_enumerate_t1_machine(t1_problem):
    pts = [p.key() for p in brute_force_enumerate(t1_problem.subsystems[0])]
    assert pts == [(0, 0), (0, 1), (1, 0)]


def test_enumerate_cap():
    sub = binary_sub(np.zeros(21))
    with pytest.raises(EnumerationCapExceeded):
        brute_force_enumerate(sub)


# agreement properties -------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(hs.integers(0, 10 ** 6), hs.booleans())
def test_oracle_agreement(seed, integer_data):
    p = ref.random_problem(seed, mixed=not integer_data, integer_data=integer_data)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        lam = rng.normal(scale=2, size=p.m)
        if integer_data:
            lam = np.round(lam)
        for sub in p.subsystems:
            got = solve_subproblem(sub, lam)
            assert sub.is_local_feasible(got)
            val = subproblem_objective(sub, lam, got)
            if integer_data:
                assert val == ref.sub_min(sub, lam)
            else:
                assert val == pytest.approx(ref.sub_min(sub, lam), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(hs.integers(0, 10 ** 6), hs.floats(0, 10))
def test_penalized_agreement(seed, rho):
    p = ref.random_problem(seed)
    rng = np.random.default_rng(seed)
    lam = rng.normal(size=p.m)
    resid = rng.integers(-2, 3, p.m).astype(float)
    for sub in p.subsystems:
        ctx = PenaltyContext(rho, resid)
        cand, value = solve_penalized_with_value(sub, lam, ctx)
        assert sub.is_local_feasible(cand)
        assert value == pytest.approx(penalized_objective(sub, lam, ctx, cand), abs=1e-9)
        assert value == pytest.approx(ref.sub_penalized_min(sub, lam, rho, resid), abs=1e-9)


def test_penalized_value_monotone_in_rho():
    rng = np.random.default_rng(5)
    for seed in range(15):
        p = ref.random_problem(seed)
        lam = rng.normal(size=p.m)
        resid = rng.normal(size=p.m)
        for sub in p.subsystems:
            vals = [solve_penalized_with_value(sub, lam, PenaltyContext(r, resid))[1]
                    for r in np.linspace(0, 10, 11)]
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
