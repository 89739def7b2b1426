"""Dense bounded-variable primal simplex (two phases, explicit basis inverse).

Desk-scale by design: the constraint matrix is dense and the basis inverse is
maintained explicitly with periodic refactorization.  Entering variable is
chosen by the most-violating reduced cost with lowest-index tie-break, and
the method falls back to Bland's rule after a run of degenerate pivots to
guarantee termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

AT_LOWER = 1
AT_UPPER = 2
BASIC = 0

REFACTOR_EVERY = 100
RATIO_EPS = 1e-9
RATIO_TIE = 1e-7
PIVOT_MIN = 1e-8
DEGEN_TOL = 1e-12


class LpUnbounded(RuntimeError):
    """The relaxation is unbounded; with finite variable bounds this signals
    an internal error in problem construction."""


class NumericalInstability(RuntimeError):
    pass


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible"
    objective: float
    x: Optional[np.ndarray]
    iterations: int


class _Tableau:
    def __init__(self, a_ext, b, c_ext, lb, ub, pivot_tol, bland_threshold):
        self.a = a_ext
        self.b = b
        self.c = c_ext
        self.lb = lb
        self.ub = ub
        self.m, self.n = a_ext.shape
        self.pivot_tol = pivot_tol
        self.bland_threshold = bland_threshold
        self.status = np.full(self.n, AT_LOWER, dtype=np.int8)
        self.basis = np.zeros(self.m, dtype=np.int64)
        self.binv = np.eye(self.m)
        self.x = np.zeros(self.n)
        self.iterations = 0
        self.degenerate_run = 0
        self.bland = False
        self.pivots_since_refactor = 0

    def set_nonbasic_value(self, j: int) -> None:
        if self.status[j] == AT_LOWER:
            self.x[j] = self.lb[j]
        elif self.status[j] == AT_UPPER:
            self.x[j] = self.ub[j]

    def recompute_basics(self) -> None:
        nb_mask = self.status != BASIC
        rhs = self.b - self.a[:, nb_mask] @ self.x[nb_mask]
        self.x[self.basis] = self.binv @ rhs

    def refactor(self) -> None:
        bmat = self.a[:, self.basis]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as e:
            raise NumericalInstability(f"singular basis: {e}") from None
        self.recompute_basics()
        self.pivots_since_refactor = 0

    def reduced_costs(self) -> np.ndarray:
        y = self.c[self.basis] @ self.binv
        return self.c - y @ self.a

    def choose_entering(self, d: np.ndarray) -> Optional[tuple[int, int]]:
        """Return (variable, direction) or None at optimality."""
        tol = self.pivot_tol
        up = (self.status == AT_LOWER) & (d > tol)
        dn = (self.status == AT_UPPER) & (d < -tol)
        if not up.any() and not dn.any():
            return None
        if self.bland:
            cands = np.nonzero(up | dn)[0]
            j = int(cands[0])
        else:
            score = np.where(up, d, 0.0) + np.where(dn, -d, 0.0)
            j = int(np.argmax(score))
        return j, (1 if self.status[j] == AT_LOWER else -1)

    def _ratio_test(self, j: int, alpha: np.ndarray, sigma: int) -> tuple[float, int]:
        """Blocking step length and leaving row (-1 for a bound flip).

        Two passes: find the minimum ratio, then among rows within a small
        window of it prefer the largest pivot magnitude (lowest variable
        index on ties) to keep the basis inverse well conditioned.
        """
        delta = -sigma * alpha
        basis = self.basis
        xb = self.x[basis]
        ratios = np.full(self.m, np.inf)
        for i in range(self.m):
            di = delta[i]
            if di > RATIO_EPS:
                ti = (self.ub[basis[i]] - xb[i]) / di
            elif di < -RATIO_EPS:
                ti = (self.lb[basis[i]] - xb[i]) / di
            else:
                continue
            if np.isfinite(ti):
                ratios[i] = max(ti, 0.0)
        flip = self.ub[j] - self.lb[j]
        t_min = min(ratios.min(), flip)
        if not np.isfinite(t_min):
            raise LpUnbounded("improving ray with no blocking bound")
        if flip <= t_min + 1e-12:
            return flip, -1
        window = 1e-12 if self.bland else RATIO_TIE
        leave_pos = -1
        best_mag = -1.0
        for i in range(self.m):
            if ratios[i] > t_min + window:
                continue
            mag = abs(alpha[i])
            if self.bland:
                if leave_pos < 0 or basis[i] < basis[leave_pos]:
                    leave_pos = i
            elif mag > best_mag + 1e-15 or (
                abs(mag - best_mag) <= 1e-15
                and leave_pos >= 0
                and basis[i] < basis[leave_pos]
            ):
                best_mag = mag
                leave_pos = i
        return ratios[leave_pos], leave_pos

    def step(self) -> bool:
        """One pivot or bound flip; False once optimal."""
        d = self.reduced_costs()
        pick = self.choose_entering(d)
        if pick is None:
            return False
        j, sigma = pick
        alpha = self.binv @ self.a[:, j]
        t_best, leave_pos = self._ratio_test(j, alpha, sigma)
        if leave_pos >= 0 and abs(alpha[leave_pos]) < PIVOT_MIN:
            # Suspicious pivot: rebuild the inverse and re-derive the column.
            self.refactor()
            alpha = self.binv @ self.a[:, j]
            t_best, leave_pos = self._ratio_test(j, alpha, sigma)
        t = max(t_best, 0.0)
        basis = self.basis
        xb = self.x[basis]

        self.x[j] += sigma * t
        self.x[basis] = xb - sigma * t * alpha
        self.iterations += 1
        if t < DEGEN_TOL:
            self.degenerate_run += 1
            if self.degenerate_run > self.bland_threshold:
                self.bland = True
        else:
            self.degenerate_run = 0

        if leave_pos < 0:
            # Entering variable ran to its opposite bound.
            self.status[j] = AT_UPPER if sigma > 0 else AT_LOWER
            self.set_nonbasic_value(j)
            return True
        leaving = basis[leave_pos]
        hit_upper = (-sigma * alpha[leave_pos]) > 0
        self.status[leaving] = AT_UPPER if hit_upper else AT_LOWER
        self.set_nonbasic_value(leaving)
        self.status[j] = BASIC
        self.basis[leave_pos] = j

        piv = alpha[leave_pos]
        if abs(piv) < 1e-12:
            raise NumericalInstability("pivot element vanished")
        row = self.binv[leave_pos] / piv
        self.binv -= np.outer(alpha, row)
        self.binv[leave_pos] = row
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self.refactor()
        return True


def solve_lp(
    a: np.ndarray,
    senses: Sequence[str],
    b: np.ndarray,
    c: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    pivot_tol: float = 1e-9,
    maxiter: Optional[int] = None,
) -> LpResult:
    """Maximize c @ x subject to a @ x (sense) b and lb <= x <= ub.

    Structural bounds must be finite.  Returns the optimum or infeasibility;
    unboundedness raises (impossible for well-formed callers).
    """
    m, n = a.shape
    if m != len(senses) or m != len(b):
        raise ValueError("constraint shapes disagree")
    if not (np.isfinite(lb).all() and np.isfinite(ub).all()):
        raise ValueError("structural bounds must be finite")

    # Slack columns: <= gets s in [0, inf), >= gets s in (-inf, 0], = pins 0.
    slack_lb = np.zeros(m)
    slack_ub = np.zeros(m)
    for i, s in enumerate(senses):
        if s == "<=":
            slack_ub[i] = np.inf
        elif s == ">=":
            slack_lb[i] = -np.inf
        elif s != "=":
            raise ValueError(f"bad sense {s!r}")

    x0 = lb.copy()
    resid = b - a @ x0
    art_cols = []
    art_rows = []
    basis = np.zeros(m, dtype=np.int64)
    slack_ok = np.zeros(m, dtype=bool)
    for i in range(m):
        lo_i, hi_i = slack_lb[i], slack_ub[i]
        if lo_i - 1e-12 <= resid[i] <= hi_i + 1e-12:
            slack_ok[i] = True
        else:
            art_rows.append(i)
            art_cols.append(1.0 if resid[i] > 0 else -1.0)
    n_art = len(art_rows)
    n_ext = n + m + n_art
    a_ext = np.zeros((m, n_ext))
    a_ext[:, :n] = a
    a_ext[np.arange(m), n + np.arange(m)] = 1.0
    for k, (i, sg) in enumerate(zip(art_rows, art_cols)):
        a_ext[i, n + m + k] = sg
    lb_ext = np.concatenate([lb, slack_lb, np.zeros(n_art)])
    ub_ext = np.concatenate([ub, slack_ub, np.full(n_art, np.inf)])

    tab = _Tableau(
        a_ext,
        np.asarray(b, dtype=float),
        np.zeros(n_ext),
        lb_ext,
        ub_ext,
        pivot_tol,
        bland_threshold=10 * (m + n_ext),
    )
    tab.x[:n] = lb
    for i in range(m):
        tab.x[n + i] = 0.0
    art_k = 0
    for i in range(m):
        if slack_ok[i]:
            basis[i] = n + i
            tab.x[n + i] = np.clip(resid[i], slack_lb[i], slack_ub[i])
        else:
            basis[i] = n + m + art_k
            tab.x[n + m + art_k] = abs(resid[i])
            tab.status[n + i] = AT_LOWER if np.isfinite(slack_lb[i]) else AT_UPPER
            tab.set_nonbasic_value(n + i)
            art_k += 1
    tab.basis = basis
    tab.status[basis] = BASIC
    # Artificial columns carry coefficient -1 when the residual is negative,
    # so the identity is not a valid inverse of the starting basis.
    tab.refactor()

    if maxiter is None:
        maxiter = max(20000, 60 * (m + n_ext))

    if n_art:
        tab.c[:] = 0.0
        tab.c[n + m :] = -1.0
        while tab.step():
            if tab.iterations > maxiter:
                raise NumericalInstability("phase-1 iteration limit hit")
        infeas = tab.x[n + m :].sum()
        if infeas > 1e-7:
            return LpResult("infeasible", float("nan"), None, tab.iterations)
        # Freeze artificials at zero for phase 2.
        tab.ub[n + m :] = 0.0
        tab.x[n + m :] = np.clip(tab.x[n + m :], 0.0, 0.0)
        tab.bland = False
        tab.degenerate_run = 0

    tab.c[:] = 0.0
    tab.c[:n] = c
    while tab.step():
        if tab.iterations > maxiter:
            raise NumericalInstability("phase-2 iteration limit hit")
    tab.refactor()
    xs = tab.x[:n].copy()
    return LpResult("optimal", float(c @ xs), xs, tab.iterations)
