"""Adapter for external LP-file-consuming solvers.

The backend command is a template with ``{lp_file}`` and ``{sol_file}``
placeholders, overridable through the PERMDP_SOLVER_CMD environment
variable.  Exit-code contract: 0 solved, 10 infeasible, 11 unbounded,
anything else is a failure.  Solution files carry ``<variable> <value>``
line pairs; unknown variables are ignored and missing ones default to 0
with a warning.  Optimal assignments are re-checked for feasibility locally
and the objective is recomputed from the problem, not trusted from the file.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import sys
import tempfile
import time
import warnings
from typing import Optional

import numpy as np

from .problem import MilpProblem
from .solve import FEASIBILITY_TOL, SolveResult, SolverConfig

ENV_TEMPLATE = "PERMDP_SOLVER_CMD"

EXIT_OK = 0
EXIT_INFEASIBLE = 10
EXIT_UNBOUNDED = 11


class ExternalSolverError(RuntimeError):
    pass


class MalformedSolution(ValueError):
    pass


def default_command_template() -> str:
    return f"{shlex.quote(sys.executable)} -m permdp.milp.highs_backend {{lp_file}} {{sol_file}}"


def resolve_template(config: SolverConfig) -> str:
    if config.backend not in ("builtin", "external"):
        return config.backend
    return os.environ.get(ENV_TEMPLATE) or default_command_template()


def parse_solution(text: str, problem: MilpProblem) -> tuple[np.ndarray, list[str]]:
    """Parse ``<variable> <value>`` lines into a dense assignment.

    Returns the values array and a list of warnings for missing variables.
    """
    values = np.zeros(problem.n_vars)
    seen = np.zeros(problem.n_vars, dtype=bool)
    names = {name: i for i, name in enumerate(problem.var_names)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedSolution(f"line {lineno}: expected '<variable> <value>'")
        name, val = parts
        try:
            v = float(val)
        except ValueError:
            raise MalformedSolution(f"line {lineno}: bad value {val!r}") from None
        idx = names.get(name)
        if idx is None:
            continue
        values[idx] = v
        seen[idx] = True
    missing = [problem.var_names[i] for i in range(problem.n_vars) if not seen[i]]
    warns = [f"variable {n} missing from solution, defaulting to 0" for n in missing]
    return values, warns


def solve_external(problem: MilpProblem, config: SolverConfig) -> SolveResult:
    template = resolve_template(config)
    t0 = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="permdp-milp-") as tmp:
        lp_file = os.path.join(tmp, "problem.lp")
        sol_file = os.path.join(tmp, "solution.sol")
        with open(lp_file, "w", encoding="utf-8") as fh:
            problem.emit_lp(fh)
        cmd = template.format(lp_file=shlex.quote(lp_file), sol_file=shlex.quote(sol_file))
        proc = subprocess.run(
            cmd,
            shell=True,
            capture_output=True,
            text=True,
            timeout=config.time_cap_seconds,
        )
        wall = time.monotonic() - t0
        if proc.returncode == EXIT_INFEASIBLE:
            return SolveResult("infeasible", None, None, 0, wall, "external")
        if proc.returncode == EXIT_UNBOUNDED:
            return SolveResult("unbounded", None, None, 0, wall, "external")
        if proc.returncode != EXIT_OK:
            raise ExternalSolverError(
                f"external solver exited {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        try:
            with open(sol_file, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ExternalSolverError(f"no solution file: {e}") from None
    values, warns = parse_solution(text, problem)
    for w in warns:
        warnings.warn(w, stacklevel=2)
    worst, where = problem.max_violation(values)
    if worst > FEASIBILITY_TOL:
        raise ExternalSolverError(
            f"external assignment violates {where} by {worst:g}"
        )
    return SolveResult(
        "optimal", problem.objective_value(values), values, 0, wall, "external"
    )
