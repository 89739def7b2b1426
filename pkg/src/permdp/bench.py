"""Parametric benchmark generators and the corpus runner.

Four domains: obstacle navigation on a slippery grid (obs), semi-autonomous
vehicle with lossy communication (sav), aircraft collision avoidance on an
altitude ladder (aca), and warehouse navigation with an expected-step budget
(wh), plus the four-state navigation example (nav3) used throughout tests.

Structural shape follows the published domain descriptions; the nominal
probabilities (0.8/0.1/0.1 slips, channel losses 0.2/0.4, checkpoint success
0.95, nav3 medium nominal 0.9) are fixture choices verified against the
brute-force oracle on small instances.  Generators are deterministic given
their parameters and seed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .milp.encode import VertexExplosion, encoding_stats
from .model import ImdpModel, ModelError, Spec, SpecKind, make_model, validate_model
from .synth import SynthConfig, SynthesisReport, synthesize


@dataclass(frozen=True)
class BenchmarkInstance:
    domain: str
    params: dict
    model: ImdpModel
    spec: Spec
    expected_solvable: Optional[bool] = None

    def param_string(self) -> str:
        return ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))


def _interval(nominal: float, eps: float) -> tuple[float, float]:
    return max(0.0, nominal - eps), min(1.0, nominal + eps)


class _RowAccum:
    """Accumulates successor mass, merging outcomes that land on one state."""

    def __init__(self):
        self.lo: dict[int, float] = {}
        self.hi: dict[int, float] = {}

    def add(self, succ: int, nominal: float, eps: float) -> None:
        lo, hi = _interval(nominal, eps)
        self.add_interval(succ, lo, hi)

    def add_interval(self, succ: int, lo: float, hi: float) -> None:
        self.lo[succ] = self.lo.get(succ, 0.0) + lo
        self.hi[succ] = min(1.0, self.hi.get(succ, 0.0) + hi)

    def triples(self) -> list[tuple[int, float, float]]:
        return [(t, min(1.0, self.lo[t]), self.hi[t]) for t in sorted(self.lo)]


def _check(instance: BenchmarkInstance) -> BenchmarkInstance:
    diags = validate_model(instance.model)
    if diags:
        raise ModelError(
            f"{instance.domain} generator produced invalid model: "
            + "; ".join(str(d) for d in diags)
        )
    return instance


def gen_nav3(epsilon: float, p: float = 0.65) -> BenchmarkInstance:
    """Four-state navigation fixture: fast action straight to the goal with a
    failure branch, or the medium action applied twice via the middle state.
    Goal and failure states are absorbing.  Intervals have radius epsilon.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    transitions = {
        (0, 0): [(3, *_interval(0.78, epsilon)), (2, *_interval(0.22, epsilon))],
        (0, 1): [(1, *_interval(0.90, epsilon)), (2, *_interval(0.10, epsilon))],
        (1, 1): [(3, *_interval(0.90, epsilon)), (2, *_interval(0.10, epsilon))],
    }
    model = make_model(
        4,
        0,
        ["f", "m"],
        transitions,
        labels={"goal": [3]},
        state_names=["s0", "s1", "s2", "s3"],
    )
    spec = Spec(SpecKind.PROB_GE, p, frozenset({3}))
    return _check(
        BenchmarkInstance("nav3", {"epsilon": epsilon, "p": p}, model, spec)
    )


def gen_obs(
    grid: int,
    steps: int,
    epsilon: float,
    seed: int,
    p: float = 0.5,
    trap_density: float = 0.1,
) -> BenchmarkInstance:
    """Slippery grid with permanently trapping cells.

    Each move takes ``steps`` micro-steps (a deterministic chain), with the
    slip resolved on the final hop: intended direction 0.8, lateral slips 0.1
    each, all with interval radius epsilon; slips off the grid bounce back to
    the source cell.  Traps are seeded, avoiding start and goal.
    """
    if grid < 2 or steps < 1:
        raise ValueError("grid >= 2 and steps >= 1 required")
    cells = [(r, c) for r in range(grid) for c in range(grid)]
    idle = {cell: i for i, cell in enumerate(cells)}
    start, goal = (0, 0), (grid - 1, grid - 1)
    rng = random.Random(seed)
    candidates = [cell for cell in cells if cell not in (start, goal)]
    n_traps = int(round(trap_density * len(candidates)))
    traps = set(rng.sample(candidates, n_traps)) if n_traps else set()

    dirs = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}
    lateral = {0: (2, 3), 1: (2, 3), 2: (0, 1), 3: (0, 1)}
    names = [f"c{r}_{c}" for r, c in cells]
    next_idx = len(cells)
    chain_idx: dict[tuple[tuple[int, int], int, int], int] = {}
    active_cells = [cell for cell in cells if cell != goal and cell not in traps]
    for cell in active_cells:
        for d in range(4):
            dr, dc = dirs[d]
            dest = (cell[0] + dr, cell[1] + dc)
            if dest not in idle:
                continue
            for k in range(1, steps):
                chain_idx[(cell, d, k)] = next_idx
                names.append(f"c{cell[0]}_{cell[1]}_d{d}_k{k}")
                next_idx += 1

    transitions = {}
    for cell in active_cells:
        s = idle[cell]
        for d in range(4):
            dr, dc = dirs[d]
            dest = (cell[0] + dr, cell[1] + dc)
            if dest not in idle:
                continue
            final = _RowAccum()
            final.add(idle[dest], 0.8, epsilon)
            for slip_d in lateral[d]:
                sr, sc = dirs[slip_d]
                slip_dest = (cell[0] + sr, cell[1] + sc)
                target = idle[slip_dest] if slip_dest in idle else s
                final.add(target, 0.1, epsilon)
            if steps == 1:
                transitions[(s, d)] = final.triples()
            else:
                transitions[(s, d)] = [(chain_idx[(cell, d, 1)], 1.0, 1.0)]
                for k in range(1, steps - 1):
                    transitions[(chain_idx[(cell, d, k)], d)] = [
                        (chain_idx[(cell, d, k + 1)], 1.0, 1.0)
                    ]
                transitions[(chain_idx[(cell, d, steps - 1)], d)] = final.triples()

    model = make_model(
        next_idx,
        idle[start],
        ["north", "south", "west", "east"],
        transitions,
        labels={"goal": [idle[goal]]},
        state_names=names,
    )
    spec = Spec(SpecKind.PROB_GE, p, frozenset({idle[goal]}))
    from .milp.encode import prob0_max_states

    solvable = idle[start] not in prob0_max_states(model, spec.target)
    return _check(
        BenchmarkInstance(
            "obs",
            {
                "grid": grid,
                "steps": steps,
                "epsilon": epsilon,
                "seed": seed,
                "p": p,
                "trap_density": trap_density,
            },
            model,
            spec,
            expected_solvable=solvable,
        )
    )


def gen_sav(
    grid: int,
    epsilon: float,
    seed: int = 0,
    p: float = 0.5,
    loss: tuple[float, float] = (0.2, 0.4),
) -> BenchmarkInstance:
    """Ground vehicle that must keep intermittent contact with a controller.

    State tracks the cell, the distance travelled since the last successful
    contact, and the consecutive failed tries on the current attempt.  Two
    channels lose messages with probability loss[k] plus 0.1 per Manhattan
    step from the central relay (interval radius epsilon); moving past the
    contact budget grid//2 falls into a failure sink.  Retry limit is 3.
    """
    if grid < 3:
        raise ValueError("grid >= 3 required")
    del seed  # structure is deterministic; kept for a uniform generator API
    limit = grid // 2
    retries = 3
    cells = [(r, c) for r in range(grid) for c in range(grid)]
    goal_cell = (grid - 1, grid - 1)
    relay = (grid // 2, grid // 2)
    state_idx: dict[tuple, int] = {}
    names = []

    def sid(key, name) -> int:
        if key not in state_idx:
            state_idx[key] = len(names)
            names.append(name)
        return state_idx[key]

    goal = sid("goal", "goal")
    sink = sid("sink", "sink")
    for cell in cells:
        if cell == goal_cell:
            continue
        for d in range(limit + 1):
            for rty in range(retries + 1):
                sid((cell, d, rty), f"v{cell[0]}_{cell[1]}_d{d}_r{rty}")

    actions = ["north", "south", "west", "east", "try1", "try2"]
    dirs = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}
    transitions = {}
    rewards = {}
    for (key, s) in list(state_idx.items()):
        if key in ("goal", "sink"):
            continue
        cell, d, rty = key
        for a in range(4):
            dr, dc = dirs[a]
            dest = (cell[0] + dr, cell[1] + dc)
            if not (0 <= dest[0] < grid and 0 <= dest[1] < grid):
                continue
            if dest == goal_cell:
                succ = goal
            elif d + 1 > limit:
                succ = sink
            else:
                succ = state_idx[(dest, d + 1, 0)]
            transitions[(s, a)] = [(succ, 1.0, 1.0)]
        if rty < retries:
            dist = abs(cell[0] - relay[0]) + abs(cell[1] - relay[1])
            for k, base in enumerate(loss):
                eff = min(0.9, base + 0.1 * dist)
                acc = _RowAccum()
                acc.add(state_idx[(cell, 0, 0)], 1.0 - eff, epsilon)
                acc.add(state_idx[(cell, d, rty + 1)], eff, epsilon)
                transitions[(s, 4 + k)] = acc.triples()

    model = make_model(
        len(names),
        state_idx[((0, 0), 0, 0)],
        actions,
        transitions,
        rewards,
        labels={"goal": [goal]},
        state_names=names,
    )
    spec = Spec(SpecKind.PROB_GE, p, frozenset({goal}))
    return _check(
        BenchmarkInstance(
            "sav",
            {"grid": grid, "epsilon": epsilon, "p": p, "loss": loss},
            model,
            spec,
            expected_solvable=None,
        )
    )


def gen_aca(
    branch: int, epsilon: float, seed: int = 0, p: float = 0.7, columns: int = 5
) -> BenchmarkInstance:
    """Own aircraft versus a stochastic intruder on an altitude ladder.

    Both advance one column per step; the own aircraft climbs, holds or
    descends while the intruder jumps within a window of ``branch`` offsets
    whose seeded nominal weights carry interval radius epsilon.  Equal
    altitudes collide (absorbing); reaching the final column exits.
    """
    if branch < 2:
        raise ValueError("branch >= 2 required")
    height = max(4, branch)
    rng = random.Random(seed)
    offsets = list(range(-(branch // 2), branch - branch // 2))
    weights = [1.0 + 0.5 * rng.random() for _ in offsets]
    total = sum(weights)
    weights = [w / total for w in weights]

    state_idx: dict[tuple, int] = {}
    names = []

    def sid(key, name) -> int:
        if key not in state_idx:
            state_idx[key] = len(names)
            names.append(name)
        return state_idx[key]

    exit_state = sid("exit", "exit")
    crash = sid("crash", "crash")
    for x in range(columns):
        for ho in range(height):
            for hi in range(height):
                if ho != hi:
                    sid((x, ho, hi), f"x{x}_o{ho}_i{hi}")

    actions = ["climb", "hold", "descend"]
    moves = {0: 1, 1: 0, 2: -1}
    transitions = {}
    for key, s in list(state_idx.items()):
        if key in ("exit", "crash"):
            continue
        x, ho, hi = key
        for a, da in moves.items():
            ho2 = min(height - 1, max(0, ho + da))
            acc = _RowAccum()
            for off, w in zip(offsets, weights):
                hi2 = min(height - 1, max(0, hi + off))
                if ho2 == hi2:
                    succ = crash
                elif x + 1 >= columns:
                    succ = exit_state
                else:
                    succ = state_idx[(x + 1, ho2, hi2)]
                acc.add(succ, w, epsilon)
            transitions[(s, a)] = acc.triples()

    initial = state_idx[(0, 0, height - 1)]
    model = make_model(
        len(names),
        initial,
        actions,
        transitions,
        labels={"goal": [exit_state]},
        state_names=names,
    )
    spec = Spec(SpecKind.PROB_GE, p, frozenset({exit_state}))
    return _check(
        BenchmarkInstance(
            "aca",
            {"branch": branch, "epsilon": epsilon, "seed": seed, "p": p},
            model,
            spec,
            expected_solvable=None,
        )
    )


def gen_wh(
    segment_steps: int,
    epsilon: float,
    zones: int = 4,
    success: float = 0.95,
    budget_factor: float = 1.2,
) -> BenchmarkInstance:
    """Warehouse zones joined by checkpoints with two parallel routes each.

    Every micro-step costs one reward unit and succeeds with probability
    0.95 (interval radius epsilon), retrying in place on failure.  The bound
    is budget_factor times the nominal shortest expected step count, so both
    routes stay admissible for moderate uncertainty.
    """
    if segment_steps < 1 or zones < 2:
        raise ValueError("segment_steps >= 1 and zones >= 2 required")
    state_idx: dict[tuple, int] = {}
    names = []

    def sid(key, name) -> int:
        if key not in state_idx:
            state_idx[key] = len(names)
            names.append(name)
        return state_idx[key]

    for j in range(zones):
        sid(("cp", j), f"zone{j}")
    for j in range(zones - 1):
        for route in range(2):
            for k in range(1, segment_steps):
                sid((j, route, k), f"seg{j}_r{route}_k{k}")

    actions = ["route_a", "route_b", "go"]
    transitions = {}
    rewards = {}

    def step_row(j, route, k):
        """Successors of micro-step k (0 = the checkpoint itself)."""
        nxt = (
            state_idx[("cp", j + 1)]
            if k == segment_steps - 1
            else state_idx[(j, route, k + 1)]
        )
        back = state_idx[("cp", j)] if k == 0 else state_idx[(j, route, k)]
        acc = _RowAccum()
        acc.add(nxt, success, epsilon)
        acc.add(back, 1.0 - success, epsilon)
        return acc.triples()

    for j in range(zones - 1):
        cp = state_idx[("cp", j)]
        for route in range(2):
            transitions[(cp, route)] = step_row(j, route, 0)
            rewards[(cp, route)] = 1.0
            for k in range(1, segment_steps):
                s = state_idx[(j, route, k)]
                transitions[(s, 2)] = step_row(j, route, k)
                rewards[(s, 2)] = 1.0

    goal = state_idx[("cp", zones - 1)]
    nominal = (zones - 1) * segment_steps / success
    bound = budget_factor * nominal
    model = make_model(
        len(names),
        state_idx[("cp", 0)],
        actions,
        transitions,
        rewards,
        labels={"goal": [goal]},
        state_names=names,
    )
    spec = Spec(SpecKind.REW_LE, bound, frozenset({goal}))
    worst = success - epsilon
    solvable = worst > 0 and (zones - 1) * segment_steps / worst <= bound
    return _check(
        BenchmarkInstance(
            "wh",
            {
                "segment_steps": segment_steps,
                "epsilon": epsilon,
                "zones": zones,
                "success": success,
            },
            model,
            spec,
            expected_solvable=solvable,
        )
    )


GENERATORS = {
    "nav3": gen_nav3,
    "obs": gen_obs,
    "sav": gen_sav,
    "aca": gen_aca,
    "wh": gen_wh,
}


@dataclass
class SuiteRow:
    domain: str
    params: str
    states: int
    transitions: int
    encoding: str
    binaries: int = 0
    continuous: int = 0
    constraints: int = 0
    solve_seconds: float = 0.0
    status: str = "pending"
    beta: Optional[int] = None
    norm_perm: Optional[float] = None
    choice_perm: Optional[float] = None
    report: Optional[SynthesisReport] = None


SUITE_CSV_COLUMNS = (
    "domain,params,states,transitions,encoding,binaries,continuous,"
    "constraints,solve_seconds,status,beta,norm_perm,choice_perm"
)


def run_suite(
    instances: list[BenchmarkInstance],
    encodings: tuple[str, ...] = ("vertex", "dual"),
    config: Optional[SynthConfig] = None,
    check_maximality: bool = False,
) -> list[SuiteRow]:
    """Synthesize every instance under every encoding; errors are recorded in
    the row status and the suite continues."""
    base = config or SynthConfig()
    rows = []
    for inst in instances:
        for enc in encodings:
            row = SuiteRow(
                domain=inst.domain,
                params=inst.param_string(),
                states=inst.model.n_states,
                transitions=inst.model.transition_count(),
                encoding=enc,
            )
            rows.append(row)
            cfg = SynthConfig(
                encoding=enc,
                solver=base.solver,
                check_maximality=check_maximality,
                maximality_budget=base.maximality_budget,
            )
            t0 = time.monotonic()
            try:
                report = synthesize(inst.model, inst.spec, cfg)
            except VertexExplosion as e:
                row.status = f"error: {e}"
                continue
            except Exception as e:
                row.status = f"error: {type(e).__name__}: {e}"
                continue
            row.solve_seconds = time.monotonic() - t0
            row.binaries = report.stats.n_binary
            row.continuous = report.stats.n_continuous
            row.constraints = report.stats.n_constraints
            row.report = report
            if report.feasible:
                row.status = "optimal"
                row.beta = report.objective
                row.norm_perm = report.normalized_permissiveness
                row.choice_perm = report.choice_state_permissiveness
            else:
                row.status = "infeasible"
    return rows


def suite_to_csv(rows: list[SuiteRow]) -> str:
    def opt(v, fmt="{:.17g}"):
        return "" if v is None else fmt.format(v)

    out = [SUITE_CSV_COLUMNS]
    for r in rows:
        out.append(
            ",".join(
                [
                    r.domain,
                    r.params.replace(",", "|"),
                    str(r.states),
                    str(r.transitions),
                    r.encoding,
                    str(r.binaries),
                    str(r.continuous),
                    str(r.constraints),
                    f"{r.solve_seconds:.6f}",
                    r.status.split(":")[0],
                    opt(r.beta, "{}"),
                    opt(r.norm_perm),
                    opt(r.choice_perm),
                ]
            )
        )
    return "\n".join(out) + "\n"


def suite_to_text(rows: list[SuiteRow]) -> str:
    headers = SUITE_CSV_COLUMNS.split(",")
    table = [headers]
    for r in rows:
        table.append(
            [
                r.domain,
                r.params,
                str(r.states),
                str(r.transitions),
                r.encoding,
                str(r.binaries),
                str(r.continuous),
                str(r.constraints),
                f"{r.solve_seconds:.3f}",
                r.status,
                "" if r.beta is None else str(r.beta),
                "" if r.norm_perm is None else f"{r.norm_perm:.4f}",
                "" if r.choice_perm is None else f"{r.choice_perm:.4f}",
            ]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in table
    ]
    return "\n".join(lines) + "\n"
