import pytest

from permdp.bench import (
    gen_aca,
    gen_nav3,
    gen_obs,
    gen_sav,
    gen_wh,
    run_suite,
    suite_to_csv,
    suite_to_text,
    SUITE_CSV_COLUMNS,
)
from permdp.intervals import enumerate_vertices, is_feasible
from permdp.milp.encode import build_dual_encoding, build_vertex_encoding
from permdp.milp.solve import SolverConfig
from permdp.model import SpecKind, full_strategy, restrict_to_action, validate_model
from permdp.robust import brute_force_robust_value, check_robust_satisfaction, robust_value
from permdp.synth import SynthConfig, synthesize
from permdp.textio import write_model

KIND_SETUP = {
    SpecKind.PROB_GE: ("reach", "min", "min"),
    SpecKind.PROB_LE: ("reach", "max", "max"),
    SpecKind.REW_GE: ("reward", "min", "min"),
    SpecKind.REW_LE: ("reward", "max", "max"),
}


def all_instances():
    return [
        gen_nav3(0.1),
        gen_obs(3, 2, 0.05, seed=7),
        gen_sav(3, 0.03),
        gen_aca(3, 0.02, seed=1),
        gen_wh(3, 0.02),
    ]


def test_generated_models_validate():
    for inst in all_instances():
        assert validate_model(inst.model) == []
        for s, row in inst.model.iter_pairs():
            assert is_feasible(row)


def test_generators_deterministic():
    a = gen_obs(4, 3, 0.1, seed=11)
    b = gen_obs(4, 3, 0.1, seed=11)
    assert write_model(a.model) == write_model(b.model)
    c = gen_aca(4, 0.05, seed=2)
    d = gen_aca(4, 0.05, seed=2)
    assert write_model(c.model) == write_model(d.model)


def test_nav3_interval_example():
    inst = gen_nav3(0.1)
    row = inst.model.row(0, 0)
    i = row.succs.index(3)
    assert (row.lo[i], row.hi[i]) == (0.68, 0.88)
    point = gen_nav3(0.0).model.row(0, 0)
    assert point.lo == point.hi


def test_nav3_medium_two_step_worst_case():
    inst = gen_nav3(0.1)
    theta = restrict_to_action(inst.model, "m")
    v = robust_value(inst.model, theta, inst.spec.target, "reach", "min", "min")
    assert v[0] == pytest.approx(0.64, abs=1e-10)  # (0.9 - 0.1)^2
    bf = brute_force_robust_value(inst.model, theta, inst.spec)
    assert bf[0] == pytest.approx(0.64, abs=1e-10)


def test_obs_grid2_no_traps_reaches_surely():
    inst = gen_obs(2, 1, 0.0, seed=0, p=1.0)
    assert inst.model.n_states == 4
    res = check_robust_satisfaction(
        inst.model, full_strategy(inst.model), inst.spec
    )
    assert res.satisfied and res.value == pytest.approx(1.0, abs=1e-9)


def test_obs_small_matches_brute_force():
    inst = gen_obs(2, 1, 0.05, seed=7)
    theta = full_strategy(inst.model)
    vi = robust_value(inst.model, theta, inst.spec.target, "reach", "min", "min")
    bf = brute_force_robust_value(inst.model, theta, inst.spec, cap=10**7)
    assert max(abs(a - b) for a, b in zip(vi.values, bf.values)) <= 1e-9


def test_obs_state_count_scales_with_steps():
    inst = gen_obs(3, 4, 0.05, seed=7)
    base = gen_obs(3, 1, 0.05, seed=7)
    assert inst.model.n_states > 3 * base.model.n_states


def test_sav_lossless_channel_variant():
    inst = gen_sav(3, 0.0, loss=(0.0, 0.0), p=1.0)
    theta = full_strategy(inst.model)
    v = robust_value(inst.model, theta, inst.spec.target, "reach", "max", "max")
    assert v[inst.model.initial] == pytest.approx(1.0, abs=1e-9)


def test_sav_encoding_equivalence():
    inst = gen_sav(3, 0.05, p=0.05)
    cfg = SolverConfig(backend="external")
    betas = []
    for enc in ("vertex", "dual"):
        rep = synthesize(
            inst.model, inst.spec,
            SynthConfig(encoding=enc, solver=cfg, check_maximality=False),
        )
        betas.append(rep.objective if rep.feasible else None)
    assert betas[0] == betas[1]


def test_aca_branch_bounds_row_width():
    inst = gen_aca(2, 0.02, seed=1)
    for s, row in inst.model.iter_pairs():
        if not row.implicit:
            assert len(row.succs) <= 2 + 1  # merges can only shrink rows
            assert len(enumerate_vertices(row)) <= 4
    inst10 = gen_aca(10, 0.01, seed=1, columns=3)
    widths = [len(r.succs) for _, r in inst10.model.iter_pairs() if not r.implicit]
    assert max(widths) <= 10


def test_aca_vertex_rows_dwarf_dual_rows():
    inst = gen_aca(10, 0.01, seed=1, columns=3)
    vprob = build_vertex_encoding(inst.model, inst.spec)
    dprob = build_dual_encoding(inst.model, inst.spec)
    v_robust = sum(vprob.vertex_counts.values())
    d_robust = sum(dprob.dual_block_counts.values())
    assert v_robust > 5 * d_robust


def test_aca_small_oracle_equivalence():
    inst = gen_aca(2, 0.05, seed=3, columns=2)
    theta = full_strategy(inst.model)
    vi = robust_value(inst.model, theta, inst.spec.target, "reach", "min", "min")
    bf = brute_force_robust_value(inst.model, theta, inst.spec, cap=10**7)
    assert max(abs(a - b) for a, b in zip(vi.values, bf.values)) <= 1e-9


def test_wh_deterministic_variant_exact_path_length():
    inst = gen_wh(4, 0.0, zones=3, success=1.0)
    theta = full_strategy(inst.model)
    v = robust_value(inst.model, theta, inst.spec.target, "reward", "max", "max")
    assert v[inst.model.initial] == pytest.approx(8.0, abs=1e-9)  # 2 segments * 4


def test_wh_small_oracle_and_side_condition():
    inst = gen_wh(2, 0.05, zones=3)
    theta = full_strategy(inst.model)
    from permdp.robust import almost_sure_reach_set

    ok = almost_sure_reach_set(inst.model, theta, inst.spec.target)
    assert ok == frozenset(range(inst.model.n_states))
    vi = robust_value(inst.model, theta, inst.spec.target, "reward", "max", "max")
    bf = brute_force_robust_value(inst.model, theta, inst.spec, cap=10**7)
    assert max(abs(a - b) for a, b in zip(vi.values, bf.values)) <= 1e-9


def test_wh_budget_keeps_both_routes():
    inst = gen_wh(3, 0.02)
    rep = synthesize(inst.model, inst.spec, SynthConfig(check_maximality=False))
    assert rep.feasible
    assert rep.normalized_permissiveness == pytest.approx(1.0)


def test_run_suite_rows_and_csv():
    instances = [gen_nav3(0.1), gen_wh(2, 0.02, zones=3)]
    rows = run_suite(instances, ("vertex", "dual"))
    assert len(rows) == 4
    by_inst = {}
    for r in rows:
        by_inst.setdefault((r.domain, r.params), {})[r.encoding] = r
    for pair in by_inst.values():
        assert pair["vertex"].beta == pair["dual"].beta
        assert pair["vertex"].status == "optimal"
    csv = suite_to_csv(rows)
    lines = csv.strip().splitlines()
    assert lines[0] == SUITE_CSV_COLUMNS
    assert len(lines) == 5
    text = suite_to_text(rows)
    assert "nav3" in text and "wh" in text


def test_run_suite_empty():
    assert run_suite([], ("vertex",)) == []


def test_run_suite_records_errors_and_continues():
    inst = gen_nav3(0.1)
    bad = gen_aca(10, 0.01, seed=1, columns=3)
    rows = run_suite(
        [bad, inst],
        ("vertex",),
        SynthConfig(solver=SolverConfig(node_cap=2)),
    )
    assert len(rows) == 2
    assert any(r.domain == "nav3" for r in rows)
