"""Operations on a single interval-probability row (the polytope P(s,a)).

A row is feasible when sum(lower) <= 1 <= sum(upper).  Every vertex of the
polytope has at most one coordinate strictly between its bounds, so vertex
enumeration walks all (residual coordinate, bound pattern) combinations.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .model import TransitionRow

DEDUP_TOL = 1e-12


class InfeasibleRow(ValueError):
    """Raised when a row admits no probability distribution."""


def _as_bounds(row) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(row, TransitionRow):
        return np.asarray(row.lo, dtype=float), np.asarray(row.hi, dtype=float)
    lo, hi = row
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def is_feasible(row) -> bool:
    lo, hi = _as_bounds(row)
    return bool(lo.sum() <= 1.0 + 1e-15 and hi.sum() >= 1.0 - 1e-15)


def enumerate_vertices(row) -> list[tuple[float, ...]]:
    """All extreme points of the row polytope, deduplicated, in a fixed order.

    For each designated residual coordinate, the remaining coordinates take
    every lower/upper bound pattern; the residual absorbs 1 minus their sum
    and the candidate is kept when the residual lies within its own bounds.
    Two vertices are considered equal when all coordinates agree within 1e-12.
    """
    lo, hi = _as_bounds(row)
    if not is_feasible((lo, hi)):
        raise InfeasibleRow(f"row infeasible: sum lo={lo.sum():g}, sum hi={hi.sum():g}")
    k = len(lo)
    if k == 1:
        return [(1.0,)]
    seen: set[tuple[float, ...]] = set()
    out: list[np.ndarray] = []
    others_template = np.arange(k)
    for resid in range(k):
        others = others_template[others_template != resid]
        for mask in range(1 << (k - 1)):
            v = lo.copy()
            for j in range(k - 1):
                if mask >> j & 1:
                    v[others[j]] = hi[others[j]]
            rest = 1.0 - (v.sum() - v[resid])
            if not lo[resid] - DEDUP_TOL <= rest <= hi[resid] + DEDUP_TOL:
                continue
            v[resid] = rest
            # Snap coordinates sitting on a bound to the exact bound value so
            # duplicates collapse under exact comparison.
            for j in range(k):
                if abs(v[j] - lo[j]) <= DEDUP_TOL:
                    v[j] = lo[j]
                elif abs(v[j] - hi[j]) <= DEDUP_TOL:
                    v[j] = hi[j]
            key = tuple(v.tolist())
            if key not in seen:
                seen.add(key)
                out.append(v)
    if not out:
        raise InfeasibleRow("no vertex found for feasible row")
    arr = np.array(out)
    arr = arr[np.lexsort(arr.T[::-1])]
    keep = [arr[0]]
    for v in arr[1:]:
        if np.max(np.abs(v - keep[-1])) > DEDUP_TOL:
            keep.append(v)
    return [tuple(float(x) for x in v) for v in keep]


def worst_case_expectation(
    row, values: Sequence[float], direction: str
) -> tuple[float, tuple[float, ...]]:
    """Exact optimum of sum(P * values) over the row polytope, with a vertex.

    Greedy: start all coordinates at their lower bounds and hand the slack
    1 - sum(lower) to successors in value order (ascending for ``min``,
    descending for ``max``), saturating each to its upper bound.  Ties break
    on ascending successor position.  O(k log k).
    """
    lo, hi = _as_bounds(row)
    if not is_feasible((lo, hi)):
        raise InfeasibleRow("row infeasible")
    vals = np.asarray(values, dtype=float)
    if vals.shape != lo.shape:
        raise ValueError("values length does not match row successors")
    if direction == "min":
        order = np.lexsort((np.arange(len(vals)), vals))
    elif direction == "max":
        order = np.lexsort((np.arange(len(vals)), -vals))
    else:
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    p = lo.copy()
    slack = 1.0 - lo.sum()
    for j in order:
        if slack <= 0.0:
            break
        room = hi[j] - lo[j]
        give = room if room < slack else slack
        p[j] += give
        slack -= give
    for j in range(len(p)):
        if abs(p[j] - hi[j]) <= DEDUP_TOL:
            p[j] = hi[j]
        elif abs(p[j] - lo[j]) <= DEDUP_TOL:
            p[j] = lo[j]
    return float(p @ vals), tuple(float(x) for x in p)
