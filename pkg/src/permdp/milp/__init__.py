from .encode import (
    build_dual_encoding,
    build_vertex_encoding,
    compute_big_m,
    encoding_stats,
)
from .external import parse_solution, solve_external
from .problem import BINARY, CONTINUOUS, EncodingStats, MilpProblem
from .solve import SolveResult, SolverConfig, lp_relax, solve

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "EncodingStats",
    "MilpProblem",
    "SolveResult",
    "SolverConfig",
    "build_dual_encoding",
    "build_vertex_encoding",
    "compute_big_m",
    "encoding_stats",
    "lp_relax",
    "parse_solution",
    "solve",
    "solve_external",
]
