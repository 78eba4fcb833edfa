import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corefalign.assignment import brute_force, solve
from corefalign.errors import DomainError, ShapeError


def oracle(cost):
    n, m = len(cost), len(cost[0])
    return min(sum(cost[i][j] for i, j in enumerate(p)) for p in permutations(range(m), n))


matrices = st.integers(1, 6).flatmap(lambda n: st.integers(n, 7).flatmap(lambda m: st.lists(
    st.lists(st.integers(-20, 50), min_size=m, max_size=m), min_size=n, max_size=n)))


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_matches_exhaustive_oracle(cost):
    assignment, total = solve(cost)
    assert len(set(assignment)) == len(assignment)
    assert total == sum(cost[i][j] for i, j in enumerate(assignment))
    assert total == oracle(cost)
    assert brute_force(cost)[1] == total


@settings(max_examples=100, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_permutation_equivariance(cost, rng):
    rows = list(range(len(cost)))
    cols = list(range(len(cost[0])))
    rng.shuffle(rows)
    rng.shuffle(cols)
    permuted = [[cost[i][j] for j in cols] for i in rows]
    assert solve(permuted)[1] == solve(cost)[1]


@settings(max_examples=100, deadline=None)
@given(matrices, st.integers(-100, 100))
def test_row_shift_invariance(cost, k):
    shifted = [[x + k for x in r] for r in cost]
    assert solve(shifted)[0] == solve(cost)[0]


def test_float_costs_and_numpy_input():
    rng = np.random.default_rng(3)
    for _ in range(50):
        c = rng.random((4, 6))
        _, total = solve(c)
        assert math.isclose(total, oracle(c.tolist()), rel_tol=0, abs_tol=1e-12)


def test_ties_are_deterministic():
    c = [[1, 1, 1], [1, 1, 1]]
    assert solve(c) == solve(c) == ([0, 1], 2.0)


def test_known_instance():
    c = [[4, 1, 3], [2, 0, 5], [3, 2, 2]]
    assert solve(c) == ([1, 0, 2], 5.0)


def test_empty():
    assert solve([]) == ([], 0.0)


def test_errors():
    with pytest.raises(ShapeError):
        solve([[1], [2]])
    with pytest.raises(ShapeError):
        solve([[1, 2], [3]])
    with pytest.raises(DomainError):
        solve([[1, math.inf]])
    with pytest.raises(DomainError):
        solve([[math.nan]])
