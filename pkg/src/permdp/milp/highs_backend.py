"""LP-file solving subprocess built on scipy's HiGHS interface.

Usage: python -m permdp.milp.highs_backend <problem.lp> <solution.sol>

Exit codes: 0 solved to optimality (solution file holds one ``<variable>
<value>`` line per variable), 10 infeasible, 11 unbounded, 1 failure.
Any LP-file-consuming solver with this contract can replace it through the
external-backend command template.
"""

from __future__ import annotations

import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .lp_reader import read_lp


def solve_lp_file(lp_path: str, sol_path: str) -> int:
    with open(lp_path, "r", encoding="utf-8") as fh:
        model = read_lp(fh.read())
    names = model.variables
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for name, coef in model.objective.items():
        c[index[name]] = coef
    if model.maximize:
        c = -c
    lb = np.array([model.lb.get(nm, 0.0) for nm in names])
    ub = np.array([model.ub.get(nm, np.inf) for nm in names])
    rows, cols, vals = [], [], []
    clo, chi = [], []
    for i, (_, terms, sense, rhs) in enumerate(model.constraints):
        for nm, coef in terms.items():
            rows.append(i)
            cols.append(index[nm])
            vals.append(coef)
        if sense == "<=":
            clo.append(-np.inf)
            chi.append(rhs)
        elif sense == ">=":
            clo.append(rhs)
            chi.append(np.inf)
        else:
            clo.append(rhs)
            chi.append(rhs)
    m = len(model.constraints)
    a = sparse.csr_matrix((vals, (rows, cols)), shape=(m, n))
    integrality = np.array([1 if nm in model.binaries else 0 for nm in names])
    constraints = [LinearConstraint(a, np.array(clo), np.array(chi))] if m else []
    res = milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options={"mip_rel_gap": 0.0},
    )
    if res.status == 2:
        return 10
    if res.status == 3:
        return 11
    if res.status != 0 or res.x is None:
        print(f"solver failure: status={res.status} {res.message}", file=sys.stderr)
        return 1
    with open(sol_path, "w", encoding="utf-8") as fh:
        for nm, v in zip(names, res.x):
            fh.write(f"{nm} {v:.17g}\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: highs_backend <problem.lp> <solution.sol>", file=sys.stderr)
        return 2
    try:
        return solve_lp_file(argv[0], argv[1])
    except Exception as e:  # subprocess boundary: report and fail
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
