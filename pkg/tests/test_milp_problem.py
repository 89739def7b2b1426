import io

import pytest

from permdp.milp.lp_reader import read_lp
from permdp.milp.problem import BINARY, CONTINUOUS, MilpProblem, sanitize_name


def test_sanitize_names():
    assert sanitize_name("y_0_try-ch1") == "y_0_try_ch1"
    assert sanitize_name("9bad") == "v_9bad"


def test_duplicate_variable_rejected():
    p = MilpProblem()
    p.add_var("x", CONTINUOUS, 0, 1)
    with pytest.raises(ValueError):
        p.add_var("x", CONTINUOUS, 0, 1)


def test_constraint_merges_duplicate_terms():
    p = MilpProblem()
    x = p.add_var("x", CONTINUOUS, 0, 1)
    p.add_constr("c", [(1.0, x), (2.0, x)], "<=", 1.0)
    con = p.constraint(0)
    assert con.terms == ((3.0, x),)


def test_stats_empty_problem():
    stats = MilpProblem().stats()
    assert (stats.n_binary, stats.n_continuous, stats.n_constraints) == (0, 0, 0)


def test_max_violation_reports_worst():
    p = MilpProblem()
    x = p.add_var("x", CONTINUOUS, 0, 1)
    y = p.add_var("y", BINARY)
    p.add_constr("c1", [(1.0, x), (1.0, y)], "<=", 1.0)
    p.add_constr("c2", [(1.0, x)], ">=", 0.25)
    worst, where = p.max_violation([0.9, 0.9])
    assert worst == pytest.approx(0.8)
    assert where == "c1"
    assert p.is_feasible([0.5, 0.5])


def test_emit_lp_minimal_binary_problem():
    p = MilpProblem("toy")
    y = p.add_var("y", BINARY)
    p.set_objective([(1.0, y)])
    text = p.to_lp_string()
    sections = [line for line in text.splitlines() if not line.startswith(" ")]
    assert sections == ["\\ toy", "Maximize", "Subject To", "Bounds", "Binaries", "End"]
    assert " y\n" in text


def test_emit_lp_free_variable_bounds_line():
    p = MilpProblem()
    p.add_var("lam_0_f", CONTINUOUS, -2.0, 2.0)
    text = p.to_lp_string()
    assert " -2 <= lam_0_f <= 2" in text


def test_emit_lp_seventeen_digit_numerals():
    p = MilpProblem()
    x = p.add_var("x", CONTINUOUS, 0.0, 1.0)
    p.add_constr("c", [(0.1, x)], "<=", 1 / 3)
    text = p.to_lp_string()
    assert "0.10000000000000001 x" in text
    assert "0.33333333333333331" in text


def test_lp_reader_roundtrip():
    p = MilpProblem("rt")
    x = p.add_var("x_0", CONTINUOUS, 0.0, 1.0)
    y = p.add_var("y_0_f", BINARY)
    lam = p.add_var("lam_0_f", CONTINUOUS, -2.0, 2.0)
    p.add_constr("c0", [(1.0, x), (-0.68, lam), (2.0, y)], "<=", 2.0)
    p.add_constr("c1", [(1.0, y)], ">=", 1.0)
    p.add_constr("c2", [(1.0, x)], "=", 0.5)
    p.set_objective([(1.0, y), (0.25, x)])
    model = read_lp(p.to_lp_string())
    assert model.maximize
    assert model.objective == {"y_0_f": 1.0, "x_0": 0.25}
    assert model.binaries == {"y_0_f"}
    assert model.lb["lam_0_f"] == -2.0 and model.ub["lam_0_f"] == 2.0
    names = [c[0] for c in model.constraints]
    assert names == ["c0", "c1", "c2"]
    terms = model.constraints[0][1]
    assert terms == {"x_0": 1.0, "lam_0_f": -0.68, "y_0_f": 2.0}
    assert model.constraints[2][2] == "="
    assert model.constraints[2][3] == 0.5


def test_dense_matrix_shape():
    p = MilpProblem()
    x = p.add_var("x", CONTINUOUS, 0, 1)
    y = p.add_var("y", CONTINUOUS, 0, 1)
    p.add_constr("c", [(1.0, x), (-1.0, y)], "<=", 0.0)
    a, senses, b = p.dense_matrix()
    assert a.shape == (1, 2)
    assert a[0, 0] == 1.0 and a[0, 1] == -1.0
    assert senses == ["<="] and b[0] == 0.0
