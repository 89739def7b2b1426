"""Mixed-integer linear program container and LP-file writer.

Variables and constraints live in flat parallel lists so that encodings with
hundreds of thousands of rows stay cheap to build.  Constraints store merged
(coefficient, variable) terms; senses are '<=', '>=' or '='.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

_NAME_OK = re.compile(r"[^A-Za-z0-9_]")


def sanitize_name(name: str) -> str:
    out = _NAME_OK.sub("_", name)
    if not out or out[0].isdigit():
        out = "v_" + out
    return out


def format_number(v: float) -> str:
    return f"{v:.17g}"


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[float, int], ...]  # (coefficient, variable index)
    sense: str
    rhs: float


@dataclass(frozen=True)
class EncodingStats:
    n_binary: int
    n_continuous: int
    n_constraints: int
    vertex_counts: Optional[dict[tuple[int, int], int]] = None


class MilpProblem:
    """A maximization MILP under construction."""

    def __init__(self, name: str = "milp"):
        self.name = name
        self.var_names: list[str] = []
        self.var_kinds: list[str] = []
        self.var_lb: list[float] = []
        self.var_ub: list[float] = []
        self.var_roles: list[tuple] = []
        self._name_to_idx: dict[str, int] = {}
        self.con_names: list[str] = []
        self.con_senses: list[str] = []
        self.con_rhs: list[float] = []
        self._con_coefs: list[float] = []
        self._con_vidx: list[int] = []
        self._con_ptr: list[int] = [0]
        self.objective: list[tuple[float, int]] = []

    # -- construction -----------------------------------------------------

    def add_var(
        self,
        name: str,
        kind: str = CONTINUOUS,
        lb: float = 0.0,
        ub: float = 1.0,
        role: tuple = (),
    ) -> int:
        name = sanitize_name(name)
        if name in self._name_to_idx:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if not (math.isfinite(lb) and math.isfinite(ub)):
            raise ValueError(f"variable {name!r} needs finite bounds")
        if lb > ub:
            raise ValueError(f"variable {name!r} has empty bound interval")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.var_kinds.append(kind)
        self.var_lb.append(float(lb))
        self.var_ub.append(float(ub))
        self.var_roles.append(role)
        self._name_to_idx[name] = idx
        return idx

    def add_constr(
        self,
        name: str,
        terms: Iterable[tuple[float, int]],
        sense: str,
        rhs: float,
    ) -> int:
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {sense!r}")
        merged: dict[int, float] = {}
        for coef, vidx in terms:
            if not math.isfinite(coef):
                raise ValueError(f"non-finite coefficient in constraint {name!r}")
            if not 0 <= vidx < len(self.var_names):
                raise ValueError(f"constraint {name!r} references unknown variable")
            merged[vidx] = merged.get(vidx, 0.0) + coef
        idx = len(self.con_names)
        self.con_names.append(sanitize_name(name))
        self.con_senses.append(sense)
        self.con_rhs.append(float(rhs))
        for vidx in sorted(merged):
            if merged[vidx] != 0.0:
                self._con_coefs.append(merged[vidx])
                self._con_vidx.append(vidx)
        self._con_ptr.append(len(self._con_coefs))
        return idx

    def set_objective(self, terms: Iterable[tuple[float, int]]) -> None:
        self.objective = [(float(c), int(v)) for c, v in terms]

    # -- inspection --------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_constraints(self) -> int:
        return len(self.con_names)

    def var_index(self, name: str) -> int:
        return self._name_to_idx[sanitize_name(name)]

    def constraint(self, i: int) -> Constraint:
        lo, hi = self._con_ptr[i], self._con_ptr[i + 1]
        terms = tuple(
            (self._con_coefs[j], self._con_vidx[j]) for j in range(lo, hi)
        )
        return Constraint(self.con_names[i], terms, self.con_senses[i], self.con_rhs[i])

    def constraints(self) -> Iterator[Constraint]:
        for i in range(self.n_constraints):
            yield self.constraint(i)

    def stats(self, vertex_counts: Optional[dict] = None) -> EncodingStats:
        nb = sum(1 for k in self.var_kinds if k == BINARY)
        return EncodingStats(
            n_binary=nb,
            n_continuous=self.n_vars - nb,
            n_constraints=self.n_constraints,
            vertex_counts=vertex_counts,
        )

    def dense_matrix(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        """Constraint matrix as a dense array (desk-scale problems only)."""
        a = np.zeros((self.n_constraints, self.n_vars))
        for i in range(self.n_constraints):
            lo, hi = self._con_ptr[i], self._con_ptr[i + 1]
            for j in range(lo, hi):
                a[i, self._con_vidx[j]] = self._con_coefs[j]
        return a, list(self.con_senses), np.asarray(self.con_rhs)

    def objective_value(self, x: Sequence[float]) -> float:
        return float(sum(c * x[v] for c, v in self.objective))

    def max_violation(self, x: Sequence[float]) -> tuple[float, Optional[str]]:
        """Largest constraint or bound violation of an assignment."""
        worst = 0.0
        where: Optional[str] = None
        for idx in range(self.n_vars):
            v = max(self.var_lb[idx] - x[idx], x[idx] - self.var_ub[idx])
            if v > worst:
                worst, where = v, f"bounds of {self.var_names[idx]}"
        for i in range(self.n_constraints):
            lo, hi = self._con_ptr[i], self._con_ptr[i + 1]
            lhs = 0.0
            for j in range(lo, hi):
                lhs += self._con_coefs[j] * x[self._con_vidx[j]]
            sense = self.con_senses[i]
            rhs = self.con_rhs[i]
            if sense == "<=":
                v = lhs - rhs
            elif sense == ">=":
                v = rhs - lhs
            else:
                v = abs(lhs - rhs)
            if v > worst:
                worst, where = v, self.con_names[i]
        return worst, where

    def is_feasible(self, x: Sequence[float], tol: float = 1e-6) -> bool:
        worst, _ = self.max_violation(x)
        return worst <= tol

    # -- LP file output ----------------------------------------------------

    def _terms_text(self, coefs: Sequence[float], vidxs: Sequence[int]) -> str:
        parts = []
        for coef, vidx in zip(coefs, vidxs):
            sign = "-" if coef < 0 else "+"
            mag = abs(coef)
            if parts:
                parts.append(sign)
            elif sign == "-":
                parts.append("-")
            parts.append(f"{format_number(mag)} {self.var_names[vidx]}")
        return " ".join(parts)

    def emit_lp(self, stream) -> None:
        """Write the problem in LP format with deterministic ordering.

        Sections: Maximize, Subject To, Bounds, Binaries, End.  Numerals carry
        17 significant digits so values round-trip bit for bit.
        """
        w = stream.write
        w("\\ " + self.name + "\n")
        w("Maximize\n")
        if self.objective:
            coefs = [c for c, _ in self.objective]
            vidxs = [v for _, v in self.objective]
            w(" obj: " + self._terms_text(coefs, vidxs) + "\n")
        else:
            w(f" obj: 0 {self.var_names[0]}\n" if self.var_names else " obj:\n")
        w("Subject To\n")
        for i in range(self.n_constraints):
            lo, hi = self._con_ptr[i], self._con_ptr[i + 1]
            sense = self.con_senses[i]
            if lo == hi:
                # Constant constraint; keep a zero term so readers accept it.
                body = f"0 {self.var_names[0]}"
            else:
                body = self._terms_text(
                    self._con_coefs[lo:hi], self._con_vidx[lo:hi]
                )
            w(
                f" {self.con_names[i]}: {body} "
                f"{'=' if sense == '=' else sense} {format_number(self.con_rhs[i])}\n"
            )
        w("Bounds\n")
        for idx in range(self.n_vars):
            lb, ub = self.var_lb[idx], self.var_ub[idx]
            name = self.var_names[idx]
            if lb == ub:
                w(f" {name} = {format_number(lb)}\n")
            else:
                w(f" {format_number(lb)} <= {name} <= {format_number(ub)}\n")
        binaries = [self.var_names[i] for i in range(self.n_vars) if self.var_kinds[i] == BINARY]
        if binaries:
            w("Binaries\n")
            for name in binaries:
                w(f" {name}\n")
        w("End\n")

    def to_lp_string(self) -> str:
        import io

        buf = io.StringIO()
        self.emit_lp(buf)
        return buf.getvalue()
