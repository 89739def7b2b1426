"""MILP encodings of robust permissive controller synthesis.

Two equivalent constructions are provided: a vertex-enumeration encoding with
one robust constraint per extreme point of each transition-row polytope, and
a dualization encoding that replaces the inner adversarial optimization by
its LP dual (variables uh/ul for the upper and lower interval bounds, a free
lam, and an auxiliary eta linearizing lam * y with big-M rows).

Binary decision variables y_<s>_<a> exist for declared (non-implicit) pairs
at non-target states, plus the single kept action of a target state that had
declared transitions.  The objective maximizes the number of admitted pairs.

Threshold-from-below kinds need protection against self-supporting value
cycles: states that cannot reach the target at all have their value pinned
to zero, and when the model contains states that could avoid the target
forever yet can also reach it, a witness-ranking block forces any state
claiming positive value to make guaranteed progress under every admitted
action.  Expected-reward kinds always carry a coverage-gated ranking block
implementing the "target reached with probability one" side condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..intervals import enumerate_vertices
from ..model import (
    ImdpModel,
    ModelError,
    MultiStrategy,
    Spec,
    SpecKind,
    TransitionRow,
    full_strategy,
    normalize_targets,
    validate_model,
)
from ..robust import avoid_region, robust_value
from .problem import BINARY, CONTINUOUS, EncodingStats, MilpProblem

DEFAULT_VERTEX_CAP = 10**7

PROB_BIG_M = 2.0
REWARD_BIG_M_MARGIN = 0.01


class VertexExplosion(RuntimeError):
    """Raised when the vertex encoding would exceed its constraint cap."""


def prob0_max_states(model: ImdpModel, target: frozenset[int]) -> frozenset[int]:
    """States with no path to the target through edges with upper > 0."""
    preds: dict[int, list[int]] = {s: [] for s in range(model.n_states)}
    for s in range(model.n_states):
        for r in model.rows[s]:
            for t, hi in zip(r.succs, r.hi):
                if hi > 0.0:
                    preds[t].append(s)
    can = set(target)
    stack = list(target)
    while stack:
        t = stack.pop()
        for s in preds[t]:
            if s not in can:
                can.add(s)
                stack.append(s)
    return frozenset(range(model.n_states)) - frozenset(can)


def avoid_capable_states(model: ImdpModel, target: frozenset[int]) -> frozenset[int]:
    """States where some strategy and adversary support can avoid the target
    forever (greatest fixed point over the guaranteed-support abstraction)."""
    pairs = []
    for s in range(model.n_states):
        for r in model.rows[s]:
            g = [t for t, lo in zip(r.succs, r.lo) if lo > 0.0]
            h = [t for t, hi in zip(r.succs, r.hi) if hi > 0.0]
            pairs.append((s, g, h))
    return avoid_region(model.n_states, pairs, target)


def needs_positive_witness(model: ImdpModel, target: frozenset[int]) -> bool:
    """True when some state can both avoid the target forever and reach it;
    plain sub-fixed-point constraints would be unsound for such models."""
    zero = prob0_max_states(model, target)
    return any(s not in zero for s in avoid_capable_states(model, target))


def universal_progress_ranking(
    model: ImdpModel, target: frozenset[int]
) -> Optional[dict[int, int]]:
    """Ranks witnessing guaranteed progress under EVERY enabled action.

    Layer k+1 holds states all of whose actions have a successor with lower
    bound > 0 in layer <= k.  When the layering covers every state, every
    multi-strategy reaches the target almost surely from everywhere, so the
    MILP side-condition block is a constant and can be dropped.  Returns None
    when some state stays unranked.
    """
    from collections import deque

    rank: dict[int, int] = {t: 0 for t in target}
    pair_src: list[int] = []
    pair_wit: list[Optional[int]] = []
    pending: dict[int, int] = {}
    pred: dict[int, list[int]] = {}
    for s in range(model.n_states):
        if s in rank:
            continue
        for r in model.rows[s]:
            pid = len(pair_src)
            pair_src.append(s)
            pair_wit.append(None)
            pending[s] = pending.get(s, 0) + 1
            for t, lo in zip(r.succs, r.lo):
                if lo > 0.0:
                    pred.setdefault(t, []).append(pid)
    state_max: dict[int, int] = {}
    # FIFO pops states in nondecreasing rank order, so the first witness a
    # pair sees carries the minimum rank among its guaranteed successors.
    queue = deque(sorted(target))
    while queue:
        t = queue.popleft()
        for pid in pred.get(t, ()):
            if pair_wit[pid] is not None:
                continue
            pair_wit[pid] = rank[t]
            s = pair_src[pid]
            state_max[s] = max(state_max.get(s, 0), rank[t])
            pending[s] -= 1
            if pending[s] == 0 and s not in rank:
                rank[s] = 1 + state_max[s]
                queue.append(s)
    if len(rank) < model.n_states:
        return None
    return rank


def compute_big_m(model: ImdpModel, spec: Spec) -> float:
    """Deactivation constant: 2 for probability kinds; for reward kinds a
    margin above the largest robust reward-to-go under the full strategy."""
    if spec.kind.is_prob:
        return PROB_BIG_M
    norm, _ = normalize_targets(model, spec.target)
    vec = robust_value(
        norm, full_strategy(norm), spec.target, objective="reward",
        player="max", adversary="max",
    )
    return (1.0 + REWARD_BIG_M_MARGIN) * max(vec.values) + 1.0


@dataclass
class _Ctx:
    model: ImdpModel
    spec: Spec
    big_m: float
    x: list[int]
    y: dict[tuple[int, int], int]
    decision_pairs: list[tuple[int, TransitionRow]]
    zero_states: frozenset[int]


def _prepare(
    problem: MilpProblem,
    model: ImdpModel,
    spec: Spec,
    big_m: Optional[float] = None,
) -> _Ctx:
    diags = validate_model(model)
    if diags:
        raise ModelError("; ".join(str(d) for d in diags))
    if not spec.target <= frozenset(range(model.n_states)):
        raise ModelError("target set references unknown states")
    norm, _ = normalize_targets(model, spec.target)
    if big_m is None:
        big_m = compute_big_m(norm, spec)
    kind = spec.kind
    x_ub = 1.0 if kind.is_prob else big_m
    x = [
        problem.add_var(f"x_{s}", CONTINUOUS, 0.0, x_ub, role=("x", s))
        for s in range(norm.n_states)
    ]
    y: dict[tuple[int, int], int] = {}
    decision_pairs: list[tuple[int, TransitionRow]] = []
    for s in range(norm.n_states):
        for r in norm.rows[s]:
            if r.implicit:
                continue
            y[(s, r.action)] = problem.add_var(
                f"y_{s}_{norm.action_label(r.action)}", BINARY, role=("y", s, r.action)
            )
            decision_pairs.append((s, r))
    problem.set_objective([(1.0, idx) for idx in y.values()])

    # Admit at least one action wherever a choice exists.
    by_state: dict[int, list[int]] = {}
    for (s, a), idx in y.items():
        by_state.setdefault(s, []).append(idx)
    for s in sorted(by_state):
        problem.add_constr(f"admit_{s}", [(1.0, i) for i in by_state[s]], ">=", 1.0)

    # Threshold at the initial state.
    sense = ">=" if kind.is_lower_bound else "<="
    problem.add_constr("thresh", [(1.0, x[norm.initial])], sense, spec.threshold)

    # Pin target values.
    pin = 1.0 if kind.is_prob else 0.0
    for t in sorted(spec.target):
        problem.add_constr(f"pin_{t}", [(1.0, x[t])], "=", pin)

    # Pin states that cannot reach the target (probability kinds only).
    zero = frozenset()
    if kind.is_prob:
        zero = prob0_max_states(norm, spec.target)
        for s in sorted(zero - spec.target):
            problem.add_constr(f"zero_{s}", [(1.0, x[s])], "=", 0.0)

    return _Ctx(norm, spec, big_m, x, y, decision_pairs, zero)


def _append_rank_rows(
    problem: MilpProblem,
    ctx: _Ctx,
    rho: dict[int, int],
    z_vars: list[tuple[int, int, int, int]],
) -> None:
    n = ctx.model.n_states
    for s, a, t, z_idx in z_vars:
        label = ctx.model.action_label(a)
        problem.add_constr(
            f"rank_{s}_{label}_{t}",
            [(1.0, rho[t]), (-1.0, rho[s]), (float(n + 1), z_idx)],
            "<=",
            float(n),
        )


def _add_rho_vars(problem: MilpProblem, ctx: _Ctx) -> dict[int, int]:
    n = ctx.model.n_states
    rho = {}
    for s in range(n):
        ub = 0.0 if s in ctx.spec.target else float(n)
        rho[s] = problem.add_var(f"rho_{s}", CONTINUOUS, 0.0, ub, role=("rho", s))
    return rho


def _append_positive_witness_block(problem: MilpProblem, ctx: _Ctx) -> None:
    """Witness ranking for prob-ge: a state may claim positive value only if
    every admitted action has a guaranteed successor strictly closer to the
    target.  Emitted only for models with avoid-capable target-reaching states.
    """
    model, spec = ctx.model, ctx.spec
    eligible = {
        s
        for s, _ in ctx.decision_pairs
        if s not in spec.target and s not in ctx.zero_states
    }
    w = {
        s: problem.add_var(f"w_{s}", CONTINUOUS, 0.0, 1.0, role=("w", s))
        for s in sorted(eligible)
    }
    rho = _add_rho_vars(problem, ctx)
    z_vars: list[tuple[int, int, int, int]] = []
    for s in sorted(eligible):
        problem.add_constr(f"wpos_{s}", [(1.0, ctx.x[s]), (-1.0, w[s])], "<=", 0.0)
    for s, r in ctx.decision_pairs:
        if s not in eligible:
            continue
        label = model.action_label(r.action)
        cands = []
        for t, lo in zip(r.succs, r.lo):
            if lo <= 0.0:
                continue
            if t in spec.target:
                pass
            elif t not in w:
                continue  # zero or absorbing states cannot witness progress
            z_idx = problem.add_var(
                f"z_{s}_{label}_{t}", BINARY, role=("z", s, r.action, t)
            )
            cands.append((t, z_idx))
            z_vars.append((s, r.action, t, z_idx))
            if t not in spec.target:
                problem.add_constr(
                    f"zlink_{s}_{label}_{t}", [(1.0, z_idx), (-1.0, w[t])], "<=", 0.0
                )
        terms = [(1.0, w[s]), (1.0, ctx.y[(s, r.action)])]
        terms += [(-1.0, z_idx) for _, z_idx in cands]
        problem.add_constr(f"wit_{s}_{label}", terms, "<=", 1.0)
    _append_rank_rows(problem, ctx, rho, z_vars)


def _append_coverage_block(problem: MilpProblem, ctx: _Ctx) -> dict[int, int]:
    """Almost-sure reachability side condition for reward kinds.

    Coverage flags c_<s> propagate from the initial state along possible
    edges of admitted actions; every covered admitted pair must select a
    guaranteed witness successor of strictly smaller rank, which forces every
    reachable state to reach the target with probability one.
    """
    model, spec = ctx.model, ctx.spec
    non_target = [s for s in range(model.n_states) if s not in spec.target]
    c = {
        s: problem.add_var(f"c_{s}", CONTINUOUS, 0.0, 1.0, role=("c", s))
        for s in non_target
    }
    rho = _add_rho_vars(problem, ctx)
    if model.initial not in spec.target:
        problem.add_constr("cov_init", [(1.0, c[model.initial])], "=", 1.0)
    for s in non_target:
        if model.is_implicit(s):
            problem.add_constr(f"cov_trap_{s}", [(1.0, c[s])], "=", 0.0)
    z_vars: list[tuple[int, int, int, int]] = []
    for s, r in ctx.decision_pairs:
        if s in spec.target:
            continue
        label = model.action_label(r.action)
        y_idx = ctx.y[(s, r.action)]
        for t, hi in zip(r.succs, r.hi):
            if hi > 0.0 and t not in spec.target and t != s:
                problem.add_constr(
                    f"cov_prop_{s}_{label}_{t}",
                    [(1.0, c[s]), (-1.0, c[t]), (1.0, y_idx)],
                    "<=",
                    1.0,
                )
        terms = [(1.0, c[s]), (1.0, y_idx)]
        for t, lo in zip(r.succs, r.lo):
            if lo <= 0.0 or t == s:
                continue
            z_idx = problem.add_var(
                f"z_{s}_{label}_{t}", BINARY, role=("z", s, r.action, t)
            )
            terms.append((-1.0, z_idx))
            z_vars.append((s, r.action, t, z_idx))
        problem.add_constr(f"wit_{s}_{label}", terms, "<=", 1.0)
    _append_rank_rows(problem, ctx, rho, z_vars)
    return c


def _robust_row_terms(
    ctx: _Ctx,
    s: int,
    probs,
    succs,
    reward: float,
    y_idx: int,
    cov_idx: Optional[int],
) -> tuple[list[tuple[float, int]], str, float]:
    """Shared robust-inequality shape given concrete successor coefficients.

    Lower-bound kinds:  x_s <= sum(P x) [+ r] + M (1 - y)
    Upper-bound kinds:  x_s >= sum(P x) [+ r] - (M + r)(1 - y) [- M (1 - c)]
    Returned in <=-normal form.
    """
    kind = ctx.spec.kind
    m = ctx.big_m
    if kind.is_lower_bound:
        terms = [(1.0, ctx.x[s])]
        for p, t in zip(probs, succs):
            terms.append((-p, ctx.x[t]))
        terms.append((m, y_idx))
        rhs = m + reward
        return terms, "<=", rhs
    slack = m + reward
    terms = [(-1.0, ctx.x[s])]
    for p, t in zip(probs, succs):
        terms.append((p, ctx.x[t]))
    terms.append((slack, y_idx))
    rhs = slack - reward
    if cov_idx is not None:
        terms.append((m, cov_idx))
        rhs += m
    return terms, "<=", rhs


def build_vertex_encoding(
    model: ImdpModel,
    spec: Spec,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
    big_m: Optional[float] = None,
) -> MilpProblem:
    """Robust constraints instantiated at every extreme point of every row."""
    problem = MilpProblem("vertex-encoding")
    ctx = _prepare(problem, model, spec, big_m)
    kind = spec.kind
    reward_kind = not kind.is_prob
    cov = None
    if reward_kind and universal_progress_ranking(ctx.model, spec.target) is None:
        cov = _append_coverage_block(problem, ctx)
    if kind == SpecKind.PROB_GE and needs_positive_witness(ctx.model, spec.target):
        _append_positive_witness_block(problem, ctx)

    vertex_counts: dict[tuple[int, int], int] = {}
    total = 0
    for s, r in ctx.decision_pairs:
        if s in spec.target:
            continue
        verts = enumerate_vertices(r)
        vertex_counts[(s, r.action)] = len(verts)
        total += len(verts)
        if total > vertex_cap:
            raise VertexExplosion(
                f"vertex constraint count exceeds cap {vertex_cap}"
            )
        label = ctx.model.action_label(r.action)
        y_idx = ctx.y[(s, r.action)]
        cov_idx = cov[s] if cov is not None else None
        reward = r.reward if reward_kind else 0.0
        for i, v in enumerate(verts):
            terms, sense, rhs = _robust_row_terms(
                ctx, s, v, r.succs, reward, y_idx, cov_idx
            )
            problem.add_constr(f"rob_{s}_{label}_v{i}", terms, sense, rhs)
    problem.encoding = "vertex"
    problem.big_m = ctx.big_m
    problem.vertex_counts = vertex_counts
    problem.normalized_model = ctx.model
    return problem


def build_dual_encoding(
    model: ImdpModel, spec: Spec, big_m: Optional[float] = None
) -> MilpProblem:
    """Robust constraints via LP duality; linear in the number of successors.

    For each non-target decision pair, duals uh/ul per listed successor and a
    free lam plus auxiliary eta are added.  Lower-bound kinds use the dual of
    the inner minimization (lam - uh + ul <= x_t); upper-bound kinds use the
    dual of the inner maximization with the roles flipped (lam + uh - ul >=
    x_t), which weak duality forces.
    """
    problem = MilpProblem("dual-encoding")
    ctx = _prepare(problem, model, spec, big_m)
    kind = spec.kind
    reward_kind = not kind.is_prob
    cov = None
    if reward_kind and universal_progress_ranking(ctx.model, spec.target) is None:
        cov = _append_coverage_block(problem, ctx)
    if kind == SpecKind.PROB_GE and needs_positive_witness(ctx.model, spec.target):
        _append_positive_witness_block(problem, ctx)

    m = ctx.big_m
    lower_bound_kind = kind.is_lower_bound
    block_counts: dict[tuple[int, int], int] = {}
    for s, r in ctx.decision_pairs:
        if s in spec.target:
            continue
        label = ctx.model.action_label(r.action)
        y_idx = ctx.y[(s, r.action)]
        uh = []
        ul = []
        for t in r.succs:
            uh.append(
                problem.add_var(
                    f"uh_{s}_{label}_{t}", CONTINUOUS, 0.0, m, role=("uh", s, r.action, t)
                )
            )
            ul.append(
                problem.add_var(
                    f"ul_{s}_{label}_{t}", CONTINUOUS, 0.0, m, role=("ul", s, r.action, t)
                )
            )
        lam = problem.add_var(
            f"lam_{s}_{label}", CONTINUOUS, -m, m, role=("lam", s, r.action)
        )
        eta = problem.add_var(
            f"eta_{s}_{label}", CONTINUOUS, -m, m, role=("eta", s, r.action)
        )
        rows = 0
        # Dual feasibility, one row per successor.
        for i, t in enumerate(r.succs):
            if lower_bound_kind:
                terms = [(1.0, lam), (-1.0, uh[i]), (1.0, ul[i]), (-1.0, ctx.x[t])]
                problem.add_constr(f"df_{s}_{label}_{t}", terms, "<=", 0.0)
            else:
                terms = [(1.0, lam), (1.0, uh[i]), (-1.0, ul[i]), (-1.0, ctx.x[t])]
                problem.add_constr(f"df_{s}_{label}_{t}", terms, ">=", 0.0)
            rows += 1
        # Core robust inequality bounding x_s by the dual objective.
        reward = r.reward if reward_kind else 0.0
        if lower_bound_kind:
            # x_s <= M(1-y) + eta + r + sum(lo*ul - hi*uh)
            terms = [(1.0, ctx.x[s]), (-1.0, eta), (m, y_idx)]
            for i, (lo, hi) in enumerate(zip(r.lo, r.hi)):
                terms.append((-lo, ul[i]))
                terms.append((hi, uh[i]))
            problem.add_constr(f"rob_{s}_{label}", terms, "<=", m + reward)
        else:
            # x_s >= -(M+r)(1-y) [- M(1-c)] + eta + r + sum(hi*uh - lo*ul)
            slack = m + reward
            terms = [(-1.0, ctx.x[s]), (1.0, eta), (slack, y_idx)]
            for i, (lo, hi) in enumerate(zip(r.lo, r.hi)):
                terms.append((hi, uh[i]))
                terms.append((-lo, ul[i]))
            rhs = slack - reward
            if cov is not None:
                terms.append((m, cov[s]))
                rhs += m
            problem.add_constr(f"rob_{s}_{label}", terms, "<=", rhs)
        rows += 1
        # Big-M linearization of eta = lam * y.
        problem.add_constr(f"fa_lo_{s}_{label}", [(1.0, eta), (m, y_idx)], ">=", 0.0)
        problem.add_constr(f"fa_hi_{s}_{label}", [(1.0, eta), (-m, y_idx)], "<=", 0.0)
        problem.add_constr(
            f"fb_lo_{s}_{label}", [(1.0, lam), (-1.0, eta), (m, y_idx)], "<=", m
        )
        problem.add_constr(
            f"fb_hi_{s}_{label}", [(1.0, eta), (-1.0, lam), (m, y_idx)], "<=", m
        )
        rows += 4
        block_counts[(s, r.action)] = rows
    problem.encoding = "dual"
    problem.big_m = ctx.big_m
    problem.dual_block_counts = block_counts
    problem.normalized_model = ctx.model
    return problem


def encoding_stats(problem: MilpProblem) -> EncodingStats:
    return problem.stats(getattr(problem, "vertex_counts", None))
