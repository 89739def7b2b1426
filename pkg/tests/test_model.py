import pytest

from permdp.model import (
    ImdpModel,
    ModelError,
    MultiStrategy,
    Spec,
    SpecKind,
    StrategyCapExceeded,
    TransitionRow,
    choice_state_permissiveness,
    compliant_strategies,
    compliant_strategy_count,
    full_strategy,
    make_model,
    normalize_targets,
    normalized_permissiveness,
    permissiveness,
    validate_model,
)


def tiny_loop():
    return make_model(1, 0, ["a"], {(0, 0): [(0, 1.0, 1.0)]})


def test_validate_accepts_single_self_loop():
    assert validate_model(tiny_loop()) == []


def test_validate_flags_lower_above_upper():
    m = make_model(2, 0, ["a"], {(0, 0): [(1, 0.6, 0.5)], (1, 0): [(1, 1.0, 1.0)]})
    diags = validate_model(m)
    assert any("exceeds upper" in d.message for d in diags)


def test_validate_flags_lower_sum_above_one():
    # {s1: [0.6, 0.7], s2: [0.5, 0.6]}: lower mass alone already exceeds 1.
    m = make_model(
        3, 0, ["a"], {(0, 0): [(1, 0.6, 0.7), (2, 0.5, 0.6)]}
    )
    diags = validate_model(m)
    assert len([d for d in diags if "lower sum" in d.message]) == 1
    assert "1.1" in [d for d in diags if "lower sum" in d.message][0].message


def test_validate_flags_upper_sum_below_one():
    m = make_model(2, 0, ["a"], {(0, 0): [(1, 0.2, 0.4)]})
    diags = validate_model(m)
    assert any("upper sum" in d.message for d in diags)


def test_validate_flags_bounds_outside_unit():
    m = ImdpModel(
        n_states=2,
        initial=0,
        actions=("a",),
        rows=(
            (TransitionRow(0, (1,), (-0.1,), (1.2,)),),
            (TransitionRow(-1, (1,), (1.0,), (1.0,)),),
        ),
    )
    assert any("outside [0, 1]" in d.message for d in validate_model(m))


def test_make_model_rejects_duplicate_successor():
    with pytest.raises(ModelError):
        make_model(2, 0, ["a"], {(0, 0): [(1, 0.5, 0.5), (1, 0.5, 0.5)]})


def test_implicit_self_loop_added_for_absorbing_states():
    m = make_model(2, 0, ["a"], {(0, 0): [(1, 1.0, 1.0)]})
    assert m.is_implicit(1)
    assert not m.is_implicit(0)
    assert m.enabled_pair_count() == 2


def test_permissiveness_counts(nav3_01):
    m = nav3_01.model
    assert permissiveness(m, full_strategy(m)) == 5  # 2 + 1 + 1 + 1
    singletons = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert permissiveness(m, singletons) == 4


def test_permissiveness_monotone(nav3_01):
    m = nav3_01.model
    small = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert permissiveness(m, small) <= permissiveness(m, full_strategy(m))


def test_normalized_permissiveness(nav3_01):
    m = nav3_01.model
    assert normalized_permissiveness(m, full_strategy(m)) == 1.0
    theta_f = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert normalized_permissiveness(m, theta_f) == pytest.approx(4 / 5)


def test_normalized_permissiveness_two_actions_everywhere():
    transitions = {
        (0, 0): [(1, 1.0, 1.0)],
        (0, 1): [(1, 1.0, 1.0)],
        (1, 0): [(0, 1.0, 1.0)],
        (1, 1): [(1, 1.0, 1.0)],
    }
    m = make_model(2, 0, ["a", "b"], transitions)
    theta = MultiStrategy((frozenset({0}), frozenset({1})))
    assert normalized_permissiveness(m, theta) == 0.5


def test_choice_state_permissiveness(nav3_01):
    m, spec = nav3_01.model, nav3_01.spec
    # The only state with two enabled actions is the initial one.
    both = MultiStrategy(
        (frozenset({0, 1}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert choice_state_permissiveness(m, both, spec) == 1.0
    only_f = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert choice_state_permissiveness(m, only_f, spec) == 0.5


def test_choice_state_permissiveness_undefined_without_choice_states():
    m = make_model(2, 0, ["a"], {(0, 0): [(1, 1.0, 1.0)]})
    spec = Spec(SpecKind.PROB_GE, 0.5, frozenset({1}))
    assert choice_state_permissiveness(m, full_strategy(m), spec) is None


def test_compliant_strategies_counts(nav3_01):
    m = nav3_01.model
    singles = MultiStrategy(
        (frozenset({0}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    assert len(list(compliant_strategies(m, singles))) == 1
    both = MultiStrategy(
        (frozenset({0, 1}), frozenset({1}), frozenset(m.enabled(2)), frozenset(m.enabled(3)))
    )
    sigmas = list(compliant_strategies(m, both))
    assert len(sigmas) == 2 == compliant_strategy_count(m, both)
    # Lexicographic order of per-state choices.
    assert sigmas[0].choice[0] == 0 and sigmas[1].choice[0] == 1


def test_compliant_strategies_power():
    transitions = {
        (s, a): [(s, 0.5, 0.5), ((s + 1) % 3, 0.5, 0.5)]
        for s in range(3)
        for a in range(2)
    }
    m = make_model(3, 0, ["a", "b"], transitions)
    assert len(list(compliant_strategies(m, full_strategy(m)))) == 8


def test_compliant_strategies_cap():
    transitions = {
        (s, a): [(s, 0.5, 0.5), ((s + 1) % 4, 0.5, 0.5)]
        for s in range(4)
        for a in range(3)
    }
    m = make_model(4, 0, ["a", "b", "c"], transitions)
    with pytest.raises(StrategyCapExceeded):
        list(compliant_strategies(m, full_strategy(m), cap=10))


def test_normalize_targets_makes_absorbing():
    m = make_model(
        2,
        0,
        ["a", "b"],
        {
            (0, 0): [(1, 1.0, 1.0)],
            (1, 0): [(0, 0.5, 0.5), (1, 0.5, 0.5)],
            (1, 1): [(0, 1.0, 1.0)],
        },
        rewards={(1, 0): 3.0},
    )
    norm, _ = normalize_targets(m, frozenset({1}))
    rows = norm.rows[1]
    assert len(rows) == 1
    assert rows[0].succs == (1,) and rows[0].lo == (1.0,) and rows[0].reward == 0.0
    assert not norm.is_implicit(1)  # kept its first declared action label
    # Idempotent on already-normalized models.
    again, _ = normalize_targets(norm, frozenset({1}))
    assert again.rows == norm.rows
