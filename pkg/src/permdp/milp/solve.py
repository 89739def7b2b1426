"""MILP solving: built-in branch-and-bound over the dense simplex, plus an
adapter that shells out to an LP-file-consuming external solver.

The built-in backend is deterministic for a fixed configuration: branching
picks the most fractional binary (lowest index on ties), node selection is
best-bound with FIFO tie-break, and the reported assignment is the first
incumbent attaining the optimal objective under that order.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problem import BINARY, MilpProblem
from .simplex import LpResult, solve_lp

FEASIBILITY_TOL = 1e-6
PRUNE_TOL = 1e-9


class SolveCapExceeded(RuntimeError):
    pass


class SolverInternalError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    backend: str = "builtin"  # "builtin", "external", or a command template
    integrality_tol: float = 1e-6
    lp_pivot_tol: float = 1e-9
    node_cap: int = 10**6
    time_cap_seconds: Optional[float] = None
    disable_pruning: bool = False  # walk the full tree; certification runs only

    def __post_init__(self):
        if self.integrality_tol <= 0 or self.lp_pivot_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.node_cap <= 0:
            raise ValueError("node cap must be positive")


@dataclass
class SolveResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "cap-exceeded"
    objective: Optional[float]
    values: Optional[np.ndarray]
    node_count: int = 0
    wall_time: float = 0.0
    backend: str = "builtin"

    def value(self, problem: MilpProblem, name: str) -> float:
        return float(self.values[problem.var_index(name)])


def _dense_parts(problem: MilpProblem):
    a, senses, b = problem.dense_matrix()
    c = np.zeros(problem.n_vars)
    for coef, vidx in problem.objective:
        c[vidx] += coef
    lb = np.asarray(problem.var_lb, dtype=float)
    ub = np.asarray(problem.var_ub, dtype=float)
    return a, senses, b, c, lb, ub


def lp_relax(problem: MilpProblem, pivot_tol: float = 1e-9) -> SolveResult:
    """Continuous relaxation by bounded-variable simplex."""
    a, senses, b, c, lb, ub = _dense_parts(problem)
    t0 = time.monotonic()
    res = solve_lp(a, senses, b, c, lb, ub, pivot_tol=pivot_tol)
    wall = time.monotonic() - t0
    if res.status == "infeasible":
        return SolveResult("infeasible", None, None, 0, wall)
    return SolveResult("optimal", res.objective, res.x, 0, wall)


def _solve_builtin(problem: MilpProblem, config: SolverConfig) -> SolveResult:
    a, senses, b, c, lb, ub = _dense_parts(problem)
    binaries = [i for i, k in enumerate(problem.var_kinds) if k == BINARY]
    t0 = time.monotonic()
    tol = config.integrality_tol

    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []

    def push(lo: np.ndarray, hi: np.ndarray) -> bool:
        nonlocal counter
        res = solve_lp(a, senses, b, c, lo, hi, pivot_tol=config.lp_pivot_tol)
        if res.status == "infeasible":
            return False
        heapq.heappush(heap, (-res.objective, counter, res.x, lo, hi))
        counter += 1
        return True

    root_ok = push(lb.copy(), ub.copy())
    best_obj: Optional[float] = None
    best_x: Optional[np.ndarray] = None
    nodes = 0
    status = "optimal"
    if not root_ok:
        return SolveResult(
            "infeasible", None, None, 1, time.monotonic() - t0, "builtin"
        )

    while heap:
        if nodes >= config.node_cap:
            status = "cap-exceeded"
            break
        if (
            config.time_cap_seconds is not None
            and time.monotonic() - t0 > config.time_cap_seconds
        ):
            status = "cap-exceeded"
            break
        neg_bound, _, x, lo, hi = heapq.heappop(heap)
        bound = -neg_bound
        nodes += 1
        if (
            not config.disable_pruning
            and best_obj is not None
            and bound <= best_obj + PRUNE_TOL
        ):
            continue
        # Most-fractional binary, lowest index on ties.
        frac_idx = -1
        best_d = tol
        for i in binaries:
            d = abs(x[i] - round(x[i]))
            if d > best_d + 1e-15:
                best_d = d
                frac_idx = i
        if frac_idx < 0:
            if best_obj is None or bound > best_obj + PRUNE_TOL:
                best_obj = bound
                best_x = x
            continue
        # Rounding dive: binaries pinned to their nearest integer often yield
        # an incumbent immediately when the fractionality is pure degeneracy.
        lo_dive, hi_dive = lo.copy(), hi.copy()
        for i in binaries:
            v = 1.0 if x[i] >= 0.5 else 0.0
            v = min(max(v, lo_dive[i]), hi_dive[i])
            lo_dive[i] = v
            hi_dive[i] = v
        dive = solve_lp(a, senses, b, c, lo_dive, hi_dive, pivot_tol=config.lp_pivot_tol)
        if dive.status == "optimal" and (
            best_obj is None or dive.objective > best_obj + PRUNE_TOL
        ):
            best_obj = dive.objective
            best_x = dive.x
        lo_down, hi_down = lo.copy(), hi.copy()
        hi_down[frac_idx] = 0.0
        push(lo_down, hi_down)
        lo_up, hi_up = lo.copy(), hi.copy()
        lo_up[frac_idx] = 1.0
        push(lo_up, hi_up)

    wall = time.monotonic() - t0
    if best_x is None:
        return SolveResult(
            "infeasible" if status == "optimal" else status,
            None,
            None,
            nodes,
            wall,
            "builtin",
        )
    worst, where = problem.max_violation(best_x)
    if worst > FEASIBILITY_TOL:
        raise SolverInternalError(
            f"incumbent violates {where} by {worst:g} (> {FEASIBILITY_TOL})"
        )
    return SolveResult(status, float(best_obj), best_x, nodes, wall, "builtin")


def solve(problem: MilpProblem, config: Optional[SolverConfig] = None) -> SolveResult:
    """Solve to proven optimality with the configured backend.

    External results are re-checked for feasibility locally against the
    original constraint list before being trusted.
    """
    config = config or SolverConfig()
    if config.backend == "builtin":
        return _solve_builtin(problem, config)
    from .external import solve_external

    return solve_external(problem, config)
