"""End-to-end synthesis: encode, solve, extract, verify, check maximality.

A solver-optimal run must pass the independent robust-value-iteration check;
a failure there is an internal error (it would mean the encoding admitted a
multi-strategy that does not robustly satisfy the specification).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .milp.encode import build_dual_encoding, build_vertex_encoding, encoding_stats
from .milp.problem import EncodingStats, MilpProblem
from .milp.solve import SolveResult, SolverConfig, solve
from .model import (
    ImdpModel,
    ModelError,
    MultiStrategy,
    Spec,
    choice_state_permissiveness,
    normalize_targets,
    normalized_permissiveness,
    permissiveness,
    validate_strategy,
)
from .robust import SatisfactionResult, check_robust_satisfaction, robust_value

DEFAULT_MAXIMALITY_BUDGET = 14


class VerificationFailed(RuntimeError):
    """The solved multi-strategy failed independent verification; this
    indicates an encoding bug, not a property of the model."""


class ExtractionError(RuntimeError):
    pass


@dataclass
class SynthConfig:
    encoding: str = "vertex"  # "vertex" | "dual"
    solver: SolverConfig = field(default_factory=SolverConfig)
    check_maximality: bool = True
    maximality_budget: int = DEFAULT_MAXIMALITY_BUDGET


@dataclass
class MaximalityVerdict:
    augmentation_checked: bool
    augmentation_ok: Optional[bool]
    exhaustive: str  # "confirmed" | "skipped: <reason>" | "not-run"


@dataclass
class SynthesisReport:
    feasible: bool
    strategy: Optional[MultiStrategy]
    objective: Optional[int]
    beta: Optional[int]  # admitted decision pairs; always equals objective
    permissiveness_total: Optional[int]
    normalized_permissiveness: Optional[float]
    choice_state_permissiveness: Optional[float]
    encoding: str
    stats: EncodingStats
    solve_result: SolveResult
    verification: Optional[SatisfactionResult]
    maximality: Optional[MaximalityVerdict]
    model: ImdpModel
    spec: Spec


def _build(model: ImdpModel, spec: Spec, encoding: str) -> MilpProblem:
    if encoding == "vertex":
        return build_vertex_encoding(model, spec)
    if encoding == "dual":
        return build_dual_encoding(model, spec)
    raise ValueError(f"unknown encoding {encoding!r}")


def extract_strategy(
    problem: MilpProblem,
    values: np.ndarray,
    model: ImdpModel,
    integrality_tol: float = 1e-6,
) -> MultiStrategy:
    """Read the admitted sets off the y variables of an optimal assignment.

    ``model`` must be the target-normalized model the encoding was built on;
    states without y variables keep their single implicit action.
    """
    admitted: list[set[int]] = [set() for _ in range(model.n_states)]
    has_y = [False] * model.n_states
    for idx, role in enumerate(problem.var_roles):
        if role and role[0] == "y":
            has_y[role[1]] = True
            if values[idx] > 1.0 - integrality_tol:
                admitted[role[1]].add(role[2])
    out = []
    for s in range(model.n_states):
        if has_y[s]:
            if not admitted[s]:
                raise ExtractionError(
                    f"no admitted action at state {s}; solver tolerance breach"
                )
            out.append(frozenset(admitted[s]))
        else:
            out.append(frozenset(model.enabled(s)))
    theta = MultiStrategy(tuple(out))
    validate_strategy(model, theta)
    return theta


def decision_beta(problem: MilpProblem, theta: MultiStrategy) -> int:
    """Admitted pairs that carry y variables (the MILP objective's domain)."""
    count = 0
    for role in problem.var_roles:
        if role and role[0] == "y" and role[2] in theta[role[1]]:
            count += 1
    return count


def check_maximality(
    model: ImdpModel,
    spec: Spec,
    theta: MultiStrategy,
    budget: int = DEFAULT_MAXIMALITY_BUDGET,
) -> MaximalityVerdict:
    """Two tiers: every single-action augmentation must break robust
    satisfaction; when the model is small enough, exhaustively confirm no
    multi-strategy with strictly more admitted pairs satisfies the spec.
    """
    import itertools

    model, theta = normalize_targets(model, spec.target, theta)
    aug_ok = True
    for s in range(model.n_states):
        if s in spec.target:
            continue
        for a in model.enabled(s):
            if a in theta[s]:
                continue
            grown = list(theta.admitted)
            grown[s] = theta[s] | {a}
            res = check_robust_satisfaction(model, MultiStrategy(tuple(grown)), spec)
            if res.satisfied:
                aug_ok = False
    total_pairs = model.enabled_pair_count()
    if total_pairs > budget:
        return MaximalityVerdict(True, aug_ok, f"skipped: {total_pairs} pairs > budget {budget}")
    base = permissiveness(model, theta)
    choices = []
    for s in range(model.n_states):
        enabled = list(model.enabled(s))
        subsets = []
        for k in range(1, len(enabled) + 1):
            subsets.extend(frozenset(c) for c in itertools.combinations(enabled, k))
        choices.append(subsets)
    for combo in itertools.product(*choices):
        cand = MultiStrategy(tuple(combo))
        if permissiveness(model, cand) <= base:
            continue
        if check_robust_satisfaction(model, cand, spec).satisfied:
            return MaximalityVerdict(True, aug_ok, "refuted: larger strategy satisfies spec")
    return MaximalityVerdict(True, aug_ok, "confirmed")


def synthesize(
    model: ImdpModel,
    spec: Spec,
    config: Optional[SynthConfig] = None,
) -> SynthesisReport:
    config = config or SynthConfig()
    problem = _build(model, spec, config.encoding)
    norm_model = problem.normalized_model
    stats = encoding_stats(problem)
    result = solve(problem, config.solver)
    if result.status == "infeasible":
        return SynthesisReport(
            feasible=False,
            strategy=None,
            objective=None,
            beta=None,
            permissiveness_total=None,
            normalized_permissiveness=None,
            choice_state_permissiveness=None,
            encoding=config.encoding,
            stats=stats,
            solve_result=result,
            verification=None,
            maximality=None,
            model=norm_model,
            spec=spec,
        )
    if result.status != "optimal":
        raise RuntimeError(f"solver did not reach optimality: {result.status}")
    theta = extract_strategy(
        problem, result.values, norm_model, config.solver.integrality_tol
    )
    verdict = check_robust_satisfaction(norm_model, theta, spec)
    if not verdict.satisfied:
        raise VerificationFailed(
            f"synthesized strategy failed verification: {verdict.detail}"
        )
    objective = int(round(result.objective))
    if abs(result.objective - objective) > 1e-6:
        raise VerificationFailed(
            f"objective {result.objective} is not integral"
        )
    beta = decision_beta(problem, theta)
    if beta != objective:
        raise VerificationFailed(
            f"objective {objective} does not match admitted decision pairs {beta}"
        )
    maximality = None
    if config.check_maximality:
        maximality = check_maximality(
            norm_model, spec, theta, config.maximality_budget
        )
        if maximality.augmentation_ok is False or maximality.exhaustive.startswith("refuted"):
            raise VerificationFailed("maximality check refuted the synthesized strategy")
    return SynthesisReport(
        feasible=True,
        strategy=theta,
        objective=objective,
        beta=beta,
        permissiveness_total=permissiveness(norm_model, theta),
        normalized_permissiveness=normalized_permissiveness(norm_model, theta),
        choice_state_permissiveness=choice_state_permissiveness(norm_model, theta, spec),
        encoding=config.encoding,
        stats=stats,
        solve_result=result,
        verification=verdict,
        maximality=maximality,
        model=norm_model,
        spec=spec,
    )


@dataclass
class SweepRow:
    epsilon: float
    action: str
    min_value: float
    max_value: float


def sweep_epsilon(
    instance_factory: Callable[[float], tuple[ImdpModel, Spec]],
    epsilons: Iterable[float],
    actions: Optional[list[str]] = None,
) -> list[SweepRow]:
    """Robust min/max reachability of each single-action strategy over a grid.

    The factory returns the model and spec for one uncertainty radius; the
    multi-strategy is restricted to the action of interest wherever that
    action is enabled.
    """
    from .model import restrict_to_action

    rows = []
    for eps in epsilons:
        model, spec = instance_factory(eps)
        acts = actions
        if acts is None:
            acts = [model.action_label(a) for a in model.enabled(model.initial)]
        for label in acts:
            theta = restrict_to_action(model, label)
            vmin = robust_value(
                model, theta, spec.target, "reach", "min", "min"
            )[model.initial]
            vmax = robust_value(
                model, theta, spec.target, "reach", "max", "max"
            )[model.initial]
            rows.append(SweepRow(eps, label, vmin, vmax))
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    out = ["epsilon,action,min_value,max_value"]
    for r in rows:
        out.append(
            f"{r.epsilon:.17g},{r.action},{r.min_value:.17g},{r.max_value:.17g}"
        )
    return "\n".join(out) + "\n"


def report_text(report: SynthesisReport) -> str:
    lines = []
    model = report.model
    lines.append(f"encoding: {report.encoding}")
    lines.append(
        f"milp: {report.stats.n_binary} binary, {report.stats.n_continuous} continuous, "
        f"{report.stats.n_constraints} constraints"
    )
    sr = report.solve_result
    lines.append(
        f"solver: {sr.backend}, status {sr.status}, {sr.node_count} nodes, "
        f"{sr.wall_time:.3f}s"
    )
    if not report.feasible:
        lines.append("verdict: no robust multi-strategy exists")
        return "\n".join(lines) + "\n"
    lines.append(f"objective (admitted decision pairs): {report.objective}")
    lines.append(f"total admitted pairs: {report.permissiveness_total}")
    lines.append(f"normalized permissiveness: {report.normalized_permissiveness:.6f}")
    if report.choice_state_permissiveness is None:
        lines.append("choice-state permissiveness: undefined (no choice states)")
    else:
        lines.append(
            f"choice-state permissiveness: {report.choice_state_permissiveness:.6f}"
        )
    lines.append(f"verification: {report.verification.detail}")
    if report.maximality:
        lines.append(
            "maximality: single-augmentation "
            + ("ok" if report.maximality.augmentation_ok else "FAILED")
            + f", exhaustive {report.maximality.exhaustive}"
        )
    lines.append("multi-strategy:")
    for s in range(model.n_states):
        if model.is_implicit(s):
            continue
        labels = " ".join(model.action_label(a) for a in sorted(report.strategy[s]))
        lines.append(f"  {model.state_name(s)} ({s}): {labels}")
    return "\n".join(lines) + "\n"


def report_json_dict(report: SynthesisReport) -> dict:
    model = report.model
    out = {
        "feasible": report.feasible,
        "encoding": report.encoding,
        "stats": {
            "binary": report.stats.n_binary,
            "continuous": report.stats.n_continuous,
            "constraints": report.stats.n_constraints,
        },
        "solver": {
            "backend": report.solve_result.backend,
            "status": report.solve_result.status,
            "nodes": report.solve_result.node_count,
            "wall_time": report.solve_result.wall_time,
        },
    }
    if report.feasible:
        out.update(
            {
                "objective": report.objective,
                "beta": report.beta,
                "permissiveness_total": report.permissiveness_total,
                "normalized_permissiveness": report.normalized_permissiveness,
                "choice_state_permissiveness": report.choice_state_permissiveness,
                "verified_value": report.verification.value,
                "strategy": {
                    str(s): sorted(model.action_label(a) for a in report.strategy[s])
                    for s in range(model.n_states)
                    if not model.is_implicit(s)
                },
            }
        )
    return out
