"""Robust value iteration over interval MDPs, plus qualitative analysis.

The verifier is independent of the MILP encodings: values come from iterating
the robust Bellman operator (synchronous Jacobi sweeps, so the fixed point
does not depend on evaluation order), with the inner adversarial expectation
solved exactly by the greedy bound-saturation procedure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np

from .intervals import enumerate_vertices
from .model import (
    ImdpModel,
    MultiStrategy,
    Spec,
    SpecKind,
    compliant_strategies,
    compliant_strategy_count,
    normalize_targets,
    reachable_states,
    validate_strategy,
)

VI_EPSILON = 1e-12
VI_MAX_ITER = 10**6
CHAIN_EPSILON = 1e-13
SAT_TOL = 1e-9
BRUTE_FORCE_CAP = 10**7
REWARD_CEILING = 1e15


class NonConvergence(RuntimeError):
    """Value iteration hit its sweep cap before reaching the tolerance."""


class RewardDivergence(RuntimeError):
    """Reward objective requested on a strategy that may never reach the target."""


class BruteForceCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ValueVector:
    values: tuple[float, ...]
    semantics: str  # "reach-probability" | "reward-to-go"

    def __getitem__(self, s: int) -> float:
        return self.values[s]


@dataclass(frozen=True)
class SatisfactionResult:
    satisfied: bool
    value: Optional[float]
    detail: str


class _FlatRows:
    """Dense row arrays for vectorized sweeps, one entry block per (s, a)."""

    def __init__(self, model: ImdpModel):
        row_state = []
        row_action = []
        row_reward = []
        cols = []
        lo = []
        hi = []
        ptr = [0]
        state_ptr = [0]
        for s in range(model.n_states):
            for r in model.rows[s]:
                row_state.append(s)
                row_action.append(r.action)
                row_reward.append(r.reward)
                cols.extend(r.succs)
                lo.extend(r.lo)
                hi.extend(r.hi)
                ptr.append(len(cols))
            state_ptr.append(len(row_state))
        self.n_states = model.n_states
        self.row_state = np.asarray(row_state, dtype=np.int64)
        self.row_action = np.asarray(row_action, dtype=np.int64)
        self.row_reward = np.asarray(row_reward, dtype=float)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.ptr = np.asarray(ptr, dtype=np.int64)
        self.state_ptr = np.asarray(state_ptr, dtype=np.int64)
        self.cap = self.hi - self.lo
        self.sizes = np.diff(self.ptr)
        self.row_of_entry = np.repeat(np.arange(len(row_state)), self.sizes)
        self.base_lo_sum = np.add.reduceat(self.lo, self.ptr[:-1])
        self.slack = 1.0 - self.base_lo_sum

    def admitted_mask(self, theta: MultiStrategy) -> np.ndarray:
        mask = np.zeros(len(self.row_state), dtype=bool)
        for i in range(len(self.row_state)):
            mask[i] = int(self.row_action[i]) in theta[int(self.row_state[i])]
        return mask

    def worst_case_sweep(self, x: np.ndarray, direction: str) -> np.ndarray:
        """Adversarial expectation of x for every row at once.

        Mirrors intervals.worst_case_expectation: within each row, slack is
        distributed in value order (ties on ascending successor index).
        """
        xv = x[self.cols]
        key = xv if direction == "min" else -xv
        order = np.lexsort((self.cols, key, self.row_of_entry))
        cap_o = self.cap[order]
        cum = np.cumsum(cap_o)
        seg_end = cum[self.ptr[1:] - 1]
        seg_offset = np.concatenate(([0.0], seg_end[:-1]))
        cum_before = cum - cap_o - np.repeat(seg_offset, self.sizes)
        take = np.clip(np.repeat(self.slack, self.sizes) - cum_before, 0.0, cap_o)
        contrib = self.lo[order] * xv[order] + take * xv[order]
        return np.add.reduceat(contrib, self.ptr[:-1])


_FLAT_CACHE: dict[int, tuple[ImdpModel, _FlatRows]] = {}


def _flat(model: ImdpModel) -> _FlatRows:
    hit = _FLAT_CACHE.get(id(model))
    if hit is not None and hit[0] is model:
        return hit[1]
    fr = _FlatRows(model)
    if len(_FLAT_CACHE) > 64:
        _FLAT_CACHE.clear()
    _FLAT_CACHE[id(model)] = (model, fr)
    return fr


def avoid_region(
    n_states: int,
    pairs: list[tuple[int, list[int], list[int]]],
    target: frozenset[int],
) -> frozenset[int]:
    """Greatest fixed point of the avoid condition, worklist implementation.

    ``pairs`` lists (state, guaranteed successors, possible successors) for
    every usable row.  Z is the largest target-free set where some row keeps
    all guaranteed successors in Z and, when nothing is guaranteed, at least
    one possible successor in Z.  Linear in the number of edges.
    """
    from collections import deque

    n_pairs = len(pairs)
    g_out = [0] * n_pairs  # guaranteed successors currently outside Z
    h_in = [0] * n_pairs  # possible successors currently inside Z
    has_g = [False] * n_pairs
    alive_count = [0] * n_states
    pred_g: dict[int, list[int]] = {}
    pred_h: dict[int, list[int]] = {}
    in_z = [True] * n_states
    for t in target:
        in_z[t] = False

    def alive(pid: int) -> bool:
        return g_out[pid] == 0 and (has_g[pid] or h_in[pid] > 0)

    for pid, (s, g, h) in enumerate(pairs):
        has_g[pid] = bool(g)
        for t in g:
            if not in_z[t]:
                g_out[pid] += 1
            pred_g.setdefault(t, []).append(pid)
        for t in h:
            if in_z[t]:
                h_in[pid] += 1
            pred_h.setdefault(t, []).append(pid)
    for pid, (s, _, _) in enumerate(pairs):
        if alive(pid):
            alive_count[s] += 1

    queue = deque(s for s in range(n_states) if in_z[s] and alive_count[s] == 0)
    dead = [False] * n_pairs
    for pid in range(n_pairs):
        dead[pid] = not alive(pid)
    while queue:
        s = queue.popleft()
        if not in_z[s]:
            continue
        in_z[s] = False
        for pid in pred_g.get(s, ()):
            g_out[pid] += 1
            if not dead[pid]:
                dead[pid] = True
                src = pairs[pid][0]
                alive_count[src] -= 1
                if alive_count[src] == 0 and in_z[src]:
                    queue.append(src)
        for pid in pred_h.get(s, ()):
            h_in[pid] -= 1
            if not dead[pid] and not alive(pid):
                dead[pid] = True
                src = pairs[pid][0]
                alive_count[src] -= 1
                if alive_count[src] == 0 and in_z[src]:
                    queue.append(src)
    return frozenset(s for s in range(n_states) if in_z[s])


def almost_sure_reach_set(
    model: ImdpModel, theta: MultiStrategy, target: frozenset[int]
) -> frozenset[int]:
    """States from which the target is reached with probability one under every
    compliant strategy and every admissible transition function.

    Works on the guaranteed-support abstraction: for each (s, a) the adversary
    may realize any successor support containing {lower > 0} and contained in
    {upper > 0}.  First a greatest fixed point finds the region the adversary
    can keep the process in forever while avoiding the target; then every
    state from which that region is reachable through admitted possible edges
    is removed.
    """
    validate_strategy(model, theta)
    model, theta = normalize_targets(model, target, theta)
    pairs = []
    for s in range(model.n_states):
        for r in model.rows[s]:
            if r.action not in theta[s]:
                continue
            g = [t for t, l in zip(r.succs, r.lo) if l > 0.0]
            h = [t for t, u in zip(r.succs, r.hi) if u > 0.0]
            pairs.append((s, g, h))
    z = avoid_region(model.n_states, pairs, target)

    # Attractor of Z through admitted possible edges.
    bad = set(z)
    frontier = list(z)
    preds: dict[int, list[int]] = {}
    for s, _, h in pairs:
        for t in h:
            preds.setdefault(t, []).append(s)
    while frontier:
        t = frontier.pop()
        for s in preds.get(t, ()):
            if s not in bad:
                bad.add(s)
                frontier.append(s)
    return frozenset(range(model.n_states)) - frozenset(bad)


def _check_reward_precondition(
    model: ImdpModel, theta: MultiStrategy, target: frozenset[int]
) -> Optional[int]:
    """Return a witness state violating the almost-sure side condition, if any."""
    ok = almost_sure_reach_set(model, theta, target)
    for s in sorted(reachable_states(model, theta)):
        if s not in ok:
            return s
    return None


def _one_sweep(
    fr: _FlatRows,
    mask: np.ndarray,
    tgt: np.ndarray,
    objective: str,
    player: str,
    adversary: str,
    x: np.ndarray,
) -> np.ndarray:
    e = fr.worst_case_sweep(x, adversary)
    if objective == "reward":
        e = e + fr.row_reward
    e = np.where(mask, e, np.inf if player == "min" else -np.inf)
    reduce_fn = np.minimum.reduceat if player == "min" else np.maximum.reduceat
    nxt = reduce_fn(e, fr.state_ptr[:-1])
    nxt[tgt] = 1.0 if objective == "reach" else 0.0
    return nxt


def bellman_apply(
    model: ImdpModel,
    theta: MultiStrategy,
    target: frozenset[int],
    objective: str,
    player: str,
    adversary: str,
    values,
) -> tuple[float, ...]:
    """One synchronous application of the robust Bellman operator."""
    validate_strategy(model, theta)
    model, theta = normalize_targets(model, target, theta)
    fr = _flat(model)
    tgt = np.zeros(model.n_states, dtype=bool)
    tgt[list(target)] = True
    nxt = _one_sweep(
        fr, fr.admitted_mask(theta), tgt, objective, player, adversary,
        np.asarray(values, dtype=float),
    )
    return tuple(float(v) for v in nxt)


def robust_value(
    model: ImdpModel,
    theta: MultiStrategy,
    target: frozenset[int],
    objective: str = "reach",
    player: str = "min",
    adversary: str = "min",
    epsilon_vi: float = VI_EPSILON,
    max_iter: int = VI_MAX_ITER,
) -> ValueVector:
    """Fixed point of the robust Bellman operator under a multi-strategy.

    ``player`` resolves the choice among admitted actions, ``adversary`` the
    inner optimization over the interval polytope.  Reach values pin target
    states to 1, reward values to 0.  Iteration starts from zero and stops
    when the sup-norm change drops below ``epsilon_vi``.
    """
    if objective not in ("reach", "reward"):
        raise ValueError(f"unknown objective {objective!r}")
    validate_strategy(model, theta)
    model, theta = normalize_targets(model, target, theta)
    if objective == "reward":
        witness = _check_reward_precondition(model, theta, target)
        if witness is not None:
            raise RewardDivergence(
                f"state {witness} is reachable but may never reach the target"
            )
    fr = _flat(model)
    mask = fr.admitted_mask(theta)
    tgt = np.zeros(model.n_states, dtype=bool)
    tgt[list(target)] = True
    x = np.zeros(model.n_states)
    x[tgt] = 1.0 if objective == "reach" else 0.0
    for _ in range(max_iter):
        nxt = _one_sweep(fr, mask, tgt, objective, player, adversary, x)
        if objective == "reward" and np.max(nxt) > REWARD_CEILING:
            raise RewardDivergence("reward values exceed divergence ceiling")
        delta = np.max(np.abs(nxt - x))
        x = nxt
        if delta < epsilon_vi:
            return ValueVector(
                tuple(float(v) for v in x),
                "reach-probability" if objective == "reach" else "reward-to-go",
            )
    raise NonConvergence(f"no convergence after {max_iter} sweeps")


_KIND_SETUP = {
    SpecKind.PROB_GE: ("reach", "min", "min"),
    SpecKind.PROB_LE: ("reach", "max", "max"),
    SpecKind.REW_GE: ("reward", "min", "min"),
    SpecKind.REW_LE: ("reward", "max", "max"),
}


def check_robust_satisfaction(
    model: ImdpModel, theta: MultiStrategy, spec: Spec
) -> SatisfactionResult:
    """Decide (model, theta) |= spec robustly, with the witness value at the
    initial state.  Reward kinds first require the almost-sure side condition.
    """
    validate_strategy(model, theta)
    objective, player, adversary = _KIND_SETUP[spec.kind]
    if objective == "reward":
        norm_model, norm_theta = normalize_targets(model, spec.target, theta)
        witness = _check_reward_precondition(norm_model, norm_theta, spec.target)
        if witness is not None:
            return SatisfactionResult(
                False,
                None,
                f"almost-sure reachability side condition fails at state {witness}",
            )
    vec = robust_value(model, theta, spec.target, objective, player, adversary)
    v = vec[model.initial]
    if spec.kind.is_lower_bound:
        ok = v >= spec.threshold - SAT_TOL
        rel = ">=" if ok else "<"
    else:
        ok = v <= spec.threshold + SAT_TOL
        rel = "<=" if ok else ">"
    return SatisfactionResult(ok, v, f"value {v:.12g} {rel} threshold {spec.threshold:g}")


def _chain_value(
    n: int,
    rows: list[tuple[int, tuple[int, ...], tuple[float, ...], float]],
    target: frozenset[int],
    objective: str,
) -> np.ndarray:
    """Value of the Markov chain given per-state (state, succs, probs, reward)."""
    x = np.zeros(n)
    pin = 1.0 if objective == "reach" else 0.0
    for t in target:
        x[t] = pin
    for _ in range(VI_MAX_ITER):
        nxt = np.zeros(n)
        for s, succs, probs, reward in rows:
            acc = 0.0
            for t, p in zip(succs, probs):
                acc += p * x[t]
            if objective == "reward":
                acc += reward
            nxt[s] = acc
        for t in target:
            nxt[t] = pin
        if objective == "reward" and nxt.max() > REWARD_CEILING:
            raise RewardDivergence("chain reward diverges")
        delta = np.max(np.abs(nxt - x))
        x = nxt
        if delta < CHAIN_EPSILON:
            return x
    raise NonConvergence("chain evaluation did not converge")


def brute_force_robust_value(
    model: ImdpModel,
    theta: MultiStrategy,
    spec: Spec,
    cap: int = BRUTE_FORCE_CAP,
) -> ValueVector:
    """Exact reference values by total enumeration.

    Every compliant deterministic strategy is combined with every stationary
    choice of one polytope vertex per used row; each induced Markov chain is
    evaluated by iteration and the pointwise inf (>= kinds) or sup (<= kinds)
    is returned.  Intended for small instances only.
    """
    validate_strategy(model, theta)
    objective, player, _ = _KIND_SETUP[spec.kind]
    model, theta = normalize_targets(model, spec.target, theta)
    vertices = {}
    work = 1
    for s in range(model.n_states):
        for r in model.rows[s]:
            if r.action in theta[s]:
                vertices[(s, r.action)] = enumerate_vertices(r)
    for vs in vertices.values():
        work *= len(vs)
    work *= compliant_strategy_count(model, theta)
    if work > cap:
        raise BruteForceCapExceeded(f"enumeration size {work} exceeds cap {cap}")

    best: Optional[np.ndarray] = None
    combine = np.minimum if player == "min" else np.maximum
    for sigma in compliant_strategies(model, theta):
        used = [(s, model.row(s, sigma[s])) for s in range(model.n_states)]
        vertex_lists = [vertices[(s, r.action)] for s, r in used]
        for pick in product(*vertex_lists):
            rows = [(s, r.succs, pick[i], r.reward) for i, (s, r) in enumerate(used)]
            vals = _chain_value(model.n_states, rows, spec.target, objective)
            best = vals if best is None else combine(best, vals)
    assert best is not None
    return ValueVector(
        tuple(float(v) for v in best),
        "reach-probability" if objective == "reach" else "reward-to-go",
    )
