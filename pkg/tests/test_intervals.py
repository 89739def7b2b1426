import random
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permdp.intervals import (
    InfeasibleRow,
    enumerate_vertices,
    is_feasible,
    worst_case_expectation,
)


def test_feasibility_examples():
    assert is_feasible(([0.12, 0.68], [0.32, 0.88]))
    assert not is_feasible(([0.6, 0.5], [0.7, 0.6]))  # lower mass 1.1
    assert is_feasible(([1.0], [1.0]))


def test_vertices_two_successor_row():
    # Fast-action row at radius 0.1: exactly the two extreme distributions.
    verts = set(enumerate_vertices(([0.12, 0.68], [0.32, 0.88])))
    assert verts == {(0.32, 0.68), (0.12, 0.88)}


def test_vertices_point_polytope():
    assert enumerate_vertices(([1.0], [1.0])) == [(1.0,)]


def test_vertices_full_simplex_corners():
    verts = set(enumerate_vertices(([0, 0, 0], [1, 1, 1])))
    assert verts == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}


def test_vertices_infeasible_row_raises():
    with pytest.raises(InfeasibleRow):
        enumerate_vertices(([0.6, 0.5], [0.7, 0.6]))


def brute_force_vertices(lo, hi):
    """Reference: all (residual, bound-pattern) candidates, deduplicated by
    rounding; written independently of the production code path."""
    k = len(lo)
    found = set()
    for resid in range(k):
        others = [j for j in range(k) if j != resid]
        for mask in range(2 ** (k - 1)):
            v = list(lo)
            for bit, j in enumerate(others):
                if mask >> bit & 1:
                    v[j] = hi[j]
            rest = 1.0 - sum(v[j] for j in others)
            if lo[resid] - 1e-12 <= rest <= hi[resid] + 1e-12:
                v[resid] = rest
                found.add(tuple(round(x, 9) for x in v))
    return found


def test_vertex_count_matches_bound_pattern_enumeration_k10():
    k = 10
    lo = [0.05] * k
    hi = [0.15] * k
    verts = enumerate_vertices((lo, hi))
    assert len(verts) == len(brute_force_vertices(lo, hi))


@pytest.mark.parametrize("k", [4, 6, 8, 10])
def test_uniform_row_vertex_count_is_central_binomial(k):
    lo = [0.5 / k] * k
    hi = [1.5 / k] * k
    assert len(enumerate_vertices((lo, hi))) == comb(k, k // 2)


def random_feasible_row(rng, k):
    noms = [rng.random() + 0.02 for _ in range(k)]
    total = sum(noms)
    noms = [x / total for x in noms]
    eps = rng.choice([0.0, 0.01, 0.05, 0.15, 0.4])
    lo = [max(0.0, p - eps) for p in noms]
    hi = [min(1.0, p + eps) for p in noms]
    return lo, hi


def test_greedy_matches_vertex_extremum_on_1000_rows():
    # Adversarial expectation equals the extremum over enumerated vertices.
    rng = random.Random(20240817)
    worst = 0.0
    for _ in range(1000):
        k = rng.randint(1, 6)
        lo, hi = random_feasible_row(rng, k)
        vals = [rng.uniform(-5, 5) for _ in range(k)]
        verts = enumerate_vertices((lo, hi))
        for direction, pick in (("min", min), ("max", max)):
            g, _ = worst_case_expectation((lo, hi), vals, direction)
            ref = pick(sum(p * v for p, v in zip(vert, vals)) for vert in verts)
            worst = max(worst, abs(g - ref))
    assert worst <= 1e-12


def test_greedy_examples():
    row = ([0.12, 0.68], [0.32, 0.88])
    lo_val, dist = worst_case_expectation(row, [0.0, 1.0], "min")
    assert lo_val == pytest.approx(0.68, abs=1e-15)
    assert dist == (0.32, 0.68)
    hi_val, dist = worst_case_expectation(row, [0.0, 1.0], "max")
    assert hi_val == pytest.approx(0.88, abs=1e-15)
    assert dist == (0.12, 0.88)


def test_greedy_constant_values():
    row = ([0.1, 0.2], [0.9, 0.8])
    for direction in ("min", "max"):
        val, dist = worst_case_expectation(row, [0.7, 0.7], direction)
        assert val == pytest.approx(0.7)
        assert sum(dist) == pytest.approx(1.0)


def test_greedy_result_is_vertex():
    rng = random.Random(7)
    for _ in range(300):
        k = rng.randint(1, 6)
        lo, hi = random_feasible_row(rng, k)
        vals = [rng.uniform(-2, 2) for _ in range(k)]
        for direction in ("min", "max"):
            _, dist = worst_case_expectation((lo, hi), vals, direction)
            interior = sum(
                1 for p, l, h in zip(dist, lo, hi) if l + 1e-12 < p < h - 1e-12
            )
            assert interior <= 1
            assert sum(dist) == pytest.approx(1.0, abs=1e-12)
            assert all(l - 1e-12 <= p <= h + 1e-12 for p, l, h in zip(dist, lo, hi))


def test_no_duplicate_vertices_and_all_within_bounds():
    rng = random.Random(13)
    for _ in range(200):
        k = rng.randint(2, 5)
        lo, hi = random_feasible_row(rng, k)
        verts = enumerate_vertices((lo, hi))
        arr = np.array(verts)
        for i in range(len(verts)):
            assert abs(arr[i].sum() - 1.0) <= 1e-9
            assert (arr[i] >= np.array(lo) - 1e-12).all()
            assert (arr[i] <= np.array(hi) + 1e-12).all()
            for j in range(i + 1, len(verts)):
                assert np.max(np.abs(arr[i] - arr[j])) > 1e-12


def test_vertices_are_extreme_by_midpoint_test():
    rng = random.Random(99)
    for _ in range(150):
        k = rng.randint(2, 4)
        lo, hi = random_feasible_row(rng, k)
        verts = np.array(enumerate_vertices((lo, hi)))
        n = len(verts)
        for i in range(n):
            for j in range(i + 1, n):
                mid = (verts[i] + verts[j]) / 2
                for t in range(n):
                    if t in (i, j):
                        continue
                    assert np.max(np.abs(mid - verts[t])) > 1e-9


@given(st.integers(0, 10**6), st.integers(0, 5), st.floats(0.01, 2.0))
@settings(max_examples=200, deadline=None)
def test_min_expectation_monotone_in_values(seed, coord, bump):
    rng = random.Random(seed)
    k = rng.randint(1, 6)
    lo, hi = random_feasible_row(rng, k)
    vals = [rng.uniform(-3, 3) for _ in range(k)]
    base, _ = worst_case_expectation((lo, hi), vals, "min")
    vals[coord % k] += bump
    raised, _ = worst_case_expectation((lo, hi), vals, "min")
    assert raised >= base - 1e-12
