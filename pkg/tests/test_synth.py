import numpy as np
import pytest

from corpus import mixed_corpus
from permdp.bench import gen_nav3
from permdp.milp.encode import build_vertex_encoding
from permdp.milp.solve import SolverConfig
from permdp.model import MultiStrategy, Spec, SpecKind, full_strategy
from permdp.robust import check_robust_satisfaction
from permdp.synth import (
    ExtractionError,
    SynthConfig,
    check_maximality,
    extract_strategy,
    report_json_dict,
    report_text,
    sweep_epsilon,
    sweep_to_csv,
    synthesize,
)

GOAL = frozenset({3})


@pytest.mark.parametrize("encoding", ["vertex", "dual"])
def test_nav3_admission_table(encoding):
    for eps, p, beta, s0 in [
        (0.1, 0.65, 2, {"f"}),
        (0.1, 0.60, 3, {"f", "m"}),
        (0.05, 0.65, 3, {"f", "m"}),
    ]:
        inst = gen_nav3(eps, p)
        rep = synthesize(inst.model, inst.spec, SynthConfig(encoding=encoding))
        assert rep.feasible
        assert rep.objective == beta
        labels = {inst.model.action_label(a) for a in rep.strategy[0]}
        assert labels == s0
        assert rep.verification.satisfied
        assert rep.beta == rep.objective


def test_nav3_unachievable_threshold_is_infeasible():
    # At radius zero the best single-action value from the start is 0.81.
    inst = gen_nav3(0.0, 0.99)
    for enc in ("vertex", "dual"):
        rep = synthesize(inst.model, inst.spec, SynthConfig(encoding=enc))
        assert not rep.feasible
        assert rep.strategy is None


def test_extract_strategy_reads_y_variables(nav3_01):
    prob = build_vertex_encoding(nav3_01.model, nav3_01.spec)
    model = prob.normalized_model
    values = np.zeros(prob.n_vars)
    values[prob.var_index("y_0_f")] = 1.0
    values[prob.var_index("y_1_m")] = 0.9999995  # inside the 1e-6 tolerance
    theta = extract_strategy(prob, values, model)
    assert theta[0] == frozenset({0})
    assert theta[1] == frozenset({1})
    values[prob.var_index("y_1_m")] = 0.0
    with pytest.raises(ExtractionError):
        extract_strategy(prob, values, model)


def test_maximality_nav3(nav3_01):
    m = nav3_01.model
    spec = Spec(SpecKind.PROB_GE, 0.65, GOAL)
    theta = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    verdict = check_maximality(m, spec, theta)
    assert verdict.augmentation_ok
    assert verdict.exhaustive == "confirmed"


def test_maximality_full_strategy_trivially_maximal(nav3_01):
    m = nav3_01.model
    spec = Spec(SpecKind.PROB_GE, 0.6, GOAL)
    verdict = check_maximality(m, spec, full_strategy(m))
    assert verdict.augmentation_ok
    assert verdict.exhaustive == "confirmed"


def test_maximality_budget_skip(nav3_01):
    m = nav3_01.model
    spec = Spec(SpecKind.PROB_GE, 0.65, GOAL)
    theta = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    verdict = check_maximality(m, spec, theta, budget=2)
    assert verdict.exhaustive.startswith("skipped")


def test_synthesized_strategies_verify_and_match_beta():
    for model, spec in mixed_corpus(20):
        rep = synthesize(model, spec, SynthConfig(encoding="dual", check_maximality=False))
        if not rep.feasible:
            continue
        assert rep.verification.satisfied
        assert rep.beta == rep.objective
        # Soundness gate rechecked here, independent of the synth internals.
        res = check_robust_satisfaction(rep.model, rep.strategy, spec)
        assert res.satisfied


def test_completeness_known_strategy_floor(nav3_01, nav3_005):
    # A hand-built robustly satisfying strategy lower-bounds the objective.
    spec = Spec(SpecKind.PROB_GE, 0.65, GOAL)
    m = nav3_01.model
    theta = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert check_robust_satisfaction(m, theta, spec).satisfied
    rep = synthesize(m, spec, SynthConfig(encoding="vertex"))
    assert rep.objective >= 2
    m5 = nav3_005.model
    rep5 = synthesize(m5, spec, SynthConfig(encoding="dual"))
    assert rep5.objective >= 3


def test_encoding_independence_on_corpus():
    for model, spec in mixed_corpus(16, seed_base=4242):
        outcomes = []
        for enc in ("vertex", "dual"):
            rep = synthesize(model, spec, SynthConfig(encoding=enc, check_maximality=False))
            outcomes.append(rep.objective if rep.feasible else None)
        assert outcomes[0] == outcomes[1]


def nav3_factory(eps):
    inst = gen_nav3(eps)
    return inst.model, inst.spec


def test_sweep_single_points():
    rows = sweep_epsilon(nav3_factory, [0.0], actions=["f"])
    assert rows[0].min_value == pytest.approx(0.78, abs=1e-12)
    assert rows[0].max_value == pytest.approx(0.78, abs=1e-12)
    rows = sweep_epsilon(nav3_factory, [0.1], actions=["f"])
    assert rows[0].min_value == pytest.approx(0.68, abs=1e-10)
    assert rows[0].max_value == pytest.approx(0.88, abs=1e-10)


def test_sweep_monotone_widening_and_csv():
    grid = [round(0.01 * i, 12) for i in range(21)]
    rows = sweep_epsilon(nav3_factory, grid)
    by_action = {}
    for r in rows:
        by_action.setdefault(r.action, []).append(r)
    for action, seq in by_action.items():
        mins = [r.min_value for r in seq]
        maxs = [r.max_value for r in seq]
        assert all(a >= b - 1e-12 for a, b in zip(mins, mins[1:]))
        assert all(a <= b + 1e-12 for a, b in zip(maxs, maxs[1:]))
    csv = sweep_to_csv(rows)
    lines = csv.strip().splitlines()
    assert lines[0] == "epsilon,action,min_value,max_value"
    assert len(lines) == 1 + len(rows)


def test_report_rendering(nav3_01):
    rep = synthesize(nav3_01.model, nav3_01.spec, SynthConfig())
    text = report_text(rep)
    assert "objective (admitted decision pairs): 2" in text
    assert "s0 (0): f" in text
    blob = report_json_dict(rep)
    assert blob["objective"] == 2
    assert blob["strategy"]["0"] == ["f"]
    assert blob["normalized_permissiveness"] == pytest.approx(0.8)
