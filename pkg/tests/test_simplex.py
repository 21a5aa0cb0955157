import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy.optimize import linprog as highs

from lrkit.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, linprog, simplex_standard


def test_standard_small_optimum():
    # min -x1 - x2 s.t. x1 + 2 x2 + s1 = 4, 3 x1 + x2 + s2 = 6
    A = [[1, 2, 1, 0], [3, 1, 0, 1]]
    res = simplex_standard([-1, -1, 0, 0], A, [4, 6])
    assert res.status == OPTIMAL
    assert res.fun == pytest.approx(-2.8)
    assert res.duals is not None
    # complementary reduced costs are non-negative at the optimum
    red = np.array([-1, -1, 0, 0]) - np.asarray(A).T @ res.duals
    assert np.all(red >= -1e-9)


def test_standard_infeasible_has_farkas():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 2.0])
    res = simplex_standard([0, 0], A, b)
    assert res.status == INFEASIBLE
    y = res.farkas
    assert np.all(A.T @ y <= 1e-9) and b @ y > 0


def test_standard_unbounded():
    res = simplex_standard([-1, 0], [[1, -1]], [0])
    assert res.status == UNBOUNDED


def test_redundant_rows():
    res = simplex_standard([1, 1], [[1, 1], [2, 2]], [1, 2])
    assert res.status == OPTIMAL and res.fun == pytest.approx(1.0)


def test_linprog_bounds_and_equalities():
    res = linprog([1, -1], A_ub=[[1, 1]], b_ub=[3], A_eq=[[1, -1]], b_eq=[-1],
                  bounds=[(-2, None), (None, 5)])
    assert res.success
    assert res.fun == pytest.approx(-1.0)


@settings(max_examples=40, deadline=None)
@given(hs.integers(0, 10 ** 6))
def test_linprog_matches_highs(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    c = rng.normal(size=n)
    A = rng.normal(size=(k, n))
    b = A @ rng.uniform(-1, 1, n) + rng.uniform(0, 1, k)
    bounds = [(-2.0, 2.0)] * n
    ours = linprog(c, A, b, bounds=bounds)
    ref = highs(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    assert ours.success and ref.status == 0
    assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
    assert np.all(A @ ours.x <= b + 1e-7)
