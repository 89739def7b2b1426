"""Core domain types: interval MDPs, specifications, multi-strategies.

States are dense integer indices.  A state with no declared transitions is
treated as absorbing: it carries a single implicit self-loop action (the
``STAY`` sentinel) with probability interval [1, 1] and reward 0.  Implicit
pairs count toward permissiveness totals but never become decision variables
in the MILP encodings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Mapping, Optional, Sequence

STAY = -1  # action index of the implicit self-loop at absorbing states

DEFAULT_STRATEGY_CAP = 10**6


class ModelError(ValueError):
    """Raised when a model or strategy violates a structural invariant."""


class StrategyCapExceeded(RuntimeError):
    """Raised when a compliant-strategy enumeration would be too large."""


@dataclass(frozen=True)
class TransitionRow:
    """Interval transition row for one (state, action) pair.

    Successors are sorted ascending; absent successors have lower = upper = 0.
    """

    action: int
    succs: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    reward: float = 0.0

    @property
    def implicit(self) -> bool:
        return self.action == STAY


@dataclass(frozen=True)
class ImdpModel:
    n_states: int
    initial: int
    actions: tuple[str, ...]
    rows: tuple[tuple[TransitionRow, ...], ...]
    labels: Mapping[str, frozenset[int]] = field(default_factory=dict)
    state_names: Optional[tuple[Optional[str], ...]] = None

    def enabled(self, s: int) -> tuple[int, ...]:
        return tuple(r.action for r in self.rows[s])

    def row(self, s: int, a: int) -> TransitionRow:
        for r in self.rows[s]:
            if r.action == a:
                return r
        raise KeyError(f"action {a} not enabled in state {s}")

    def is_implicit(self, s: int) -> bool:
        return len(self.rows[s]) == 1 and self.rows[s][0].implicit

    def action_label(self, a: int) -> str:
        return "stay" if a == STAY else self.actions[a]

    def state_name(self, s: int) -> str:
        if self.state_names and self.state_names[s]:
            return self.state_names[s]
        return f"s{s}"

    def enabled_pair_count(self) -> int:
        return sum(len(rs) for rs in self.rows)

    def transition_count(self) -> int:
        return sum(len(r.succs) for rs in self.rows for r in rs)

    def iter_pairs(self) -> Iterator[tuple[int, TransitionRow]]:
        for s in range(self.n_states):
            for r in self.rows[s]:
                yield s, r

    def same_structure(self, other: "ImdpModel") -> bool:
        """Structural equality ignoring display names."""
        return (
            self.n_states == other.n_states
            and self.initial == other.initial
            and self.actions == other.actions
            and self.rows == other.rows
            and dict(self.labels) == dict(other.labels)
        )


class SpecKind(Enum):
    PROB_GE = "prob-ge"
    PROB_LE = "prob-le"
    REW_GE = "rew-ge"
    REW_LE = "rew-le"

    @property
    def is_prob(self) -> bool:
        return self in (SpecKind.PROB_GE, SpecKind.PROB_LE)

    @property
    def is_lower_bound(self) -> bool:
        """True when the threshold is a lower bound (>= forms)."""
        return self in (SpecKind.PROB_GE, SpecKind.REW_GE)


@dataclass(frozen=True)
class Spec:
    kind: SpecKind
    threshold: float
    target: frozenset[int]

    def __post_init__(self):
        if not self.target:
            raise ModelError("specification target set is empty")
        if self.kind.is_prob and not 0.0 <= self.threshold <= 1.0:
            raise ModelError(f"probability threshold {self.threshold} outside [0, 1]")
        if not self.kind.is_prob and self.threshold < 0.0:
            raise ModelError(f"reward threshold {self.threshold} is negative")


@dataclass(frozen=True)
class MultiStrategy:
    """Nonempty admitted-action sets, one per state."""

    admitted: tuple[frozenset[int], ...]

    def __getitem__(self, s: int) -> frozenset[int]:
        return self.admitted[s]


@dataclass(frozen=True)
class DeterministicStrategy:
    choice: tuple[int, ...]

    def __getitem__(self, s: int) -> int:
        return self.choice[s]


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    state: Optional[int] = None
    action: Optional[int] = None
    succ: Optional[int] = None

    def __str__(self) -> str:
        loc = ", ".join(
            f"{k}={v}"
            for k, v in (("state", self.state), ("action", self.action), ("succ", self.succ))
            if v is not None
        )
        return f"[{self.severity}] {self.message}" + (f" ({loc})" if loc else "")


def make_model(
    n_states: int,
    initial: int,
    actions: Sequence[str],
    transitions: Mapping[tuple[int, int], Sequence[tuple[int, float, float]]],
    rewards: Optional[Mapping[tuple[int, int], float]] = None,
    labels: Optional[Mapping[str, Sequence[int]]] = None,
    state_names: Optional[Sequence[Optional[str]]] = None,
) -> ImdpModel:
    """Assemble an ImdpModel, adding implicit self-loops for absorbing states.

    ``transitions`` maps (state, action) to (successor, lower, upper) triples.
    Structural problems (out-of-range indices, duplicate successors) raise
    ModelError immediately; interval invariants are left to validate_model.
    """
    rewards = rewards or {}
    if not 0 <= initial < n_states:
        raise ModelError(f"initial state {initial} out of range")
    by_state: dict[int, dict[int, TransitionRow]] = {s: {} for s in range(n_states)}
    for (s, a), triples in transitions.items():
        if not 0 <= s < n_states:
            raise ModelError(f"transition source {s} out of range")
        if not 0 <= a < len(actions):
            raise ModelError(f"action index {a} out of range in state {s}")
        if a in by_state[s]:
            raise ModelError(f"duplicate row for state {s}, action {a}")
        seen: set[int] = set()
        for t, _, _ in triples:
            if not 0 <= t < n_states:
                raise ModelError(f"successor {t} out of range for ({s},{a})")
            if t in seen:
                raise ModelError(f"duplicate successor {t} for ({s},{a})")
            seen.add(t)
        ordered = sorted(triples, key=lambda tr: tr[0])
        by_state[s][a] = TransitionRow(
            action=a,
            succs=tuple(t for t, _, _ in ordered),
            lo=tuple(float(l) for _, l, _ in ordered),
            hi=tuple(float(h) for _, _, h in ordered),
            reward=float(rewards.get((s, a), 0.0)),
        )
    rows = []
    for s in range(n_states):
        if by_state[s]:
            rows.append(tuple(by_state[s][a] for a in sorted(by_state[s])))
        else:
            rows.append((TransitionRow(STAY, (s,), (1.0,), (1.0,)),))
    frozen_labels = {}
    for name, members in (labels or {}).items():
        for t in members:
            if not 0 <= t < n_states:
                raise ModelError(f"label {name!r} references state {t} out of range")
        frozen_labels[name] = frozenset(members)
    return ImdpModel(
        n_states=n_states,
        initial=initial,
        actions=tuple(actions),
        rows=tuple(rows),
        labels=frozen_labels,
        state_names=tuple(state_names) if state_names else None,
    )


def validate_model(model: ImdpModel) -> list[Diagnostic]:
    """Check every model invariant; an empty result means the model is valid."""
    out: list[Diagnostic] = []
    if not 0 <= model.initial < model.n_states:
        out.append(Diagnostic("error", "initial state out of range", state=model.initial))
    for s in range(model.n_states):
        if not model.rows[s]:
            out.append(Diagnostic("error", "state has no enabled actions", state=s))
            continue
        for r in model.rows[s]:
            a = r.action
            lo_sum = 0.0
            hi_sum = 0.0
            any_pos = False
            for t, lo, hi in zip(r.succs, r.lo, r.hi):
                if not 0 <= t < model.n_states:
                    out.append(Diagnostic("error", "successor out of range", s, a, t))
                if lo < 0.0 or hi > 1.0:
                    out.append(Diagnostic("error", "bound outside [0, 1]", s, a, t))
                if lo > hi:
                    out.append(
                        Diagnostic("error", f"lower {lo:g} exceeds upper {hi:g}", s, a, t)
                    )
                lo_sum += lo
                hi_sum += hi
                any_pos = any_pos or hi > 0.0
            if lo_sum > 1.0 + 1e-15:
                out.append(
                    Diagnostic("error", f"lower sum {lo_sum:g} exceeds 1", s, a)
                )
            if hi_sum < 1.0 - 1e-15:
                out.append(
                    Diagnostic("error", f"upper sum {hi_sum:g} below 1", s, a)
                )
            if not any_pos:
                out.append(Diagnostic("error", "no successor with upper > 0", s, a))
            if r.reward < 0.0:
                out.append(Diagnostic("error", f"negative reward {r.reward:g}", s, a))
    for name, members in model.labels.items():
        for t in members:
            if not 0 <= t < model.n_states:
                out.append(Diagnostic("error", f"label {name!r} out of range", succ=t))
    return out


def full_strategy(model: ImdpModel) -> MultiStrategy:
    return MultiStrategy(tuple(frozenset(model.enabled(s)) for s in range(model.n_states)))


def singleton_strategy(model: ImdpModel, sigma: DeterministicStrategy) -> MultiStrategy:
    return MultiStrategy(tuple(frozenset((a,)) for a in sigma.choice))


def restrict_to_action(model: ImdpModel, label: str) -> MultiStrategy:
    """Admit only ``label`` wherever it is enabled, everything elsewhere."""
    a = model.actions.index(label)
    out = []
    for s in range(model.n_states):
        enabled = frozenset(model.enabled(s))
        out.append(frozenset((a,)) if a in enabled else enabled)
    return MultiStrategy(tuple(out))


def validate_strategy(model: ImdpModel, theta: MultiStrategy) -> None:
    if len(theta.admitted) != model.n_states:
        raise ModelError("multi-strategy does not cover every state")
    for s in range(model.n_states):
        enabled = set(model.enabled(s))
        if not theta[s]:
            raise ModelError(f"empty admitted set at state {s}")
        if not set(theta[s]) <= enabled:
            raise ModelError(f"admitted set at state {s} not contained in enabled actions")


def permissiveness(model: ImdpModel, theta: MultiStrategy) -> int:
    """Total number of admitted state-action pairs."""
    validate_strategy(model, theta)
    return sum(len(theta[s]) for s in range(model.n_states))


def normalized_permissiveness(model: ImdpModel, theta: MultiStrategy) -> float:
    return permissiveness(model, theta) / model.enabled_pair_count()


def reachable_states(
    model: ImdpModel,
    theta: Optional[MultiStrategy] = None,
    from_state: Optional[int] = None,
) -> frozenset[int]:
    """States reachable from ``from_state`` via admitted actions and upper > 0 edges."""
    start = model.initial if from_state is None else from_state
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        admitted = theta[s] if theta is not None else model.enabled(s)
        for r in model.rows[s]:
            if r.action not in admitted:
                continue
            for t, hi in zip(r.succs, r.hi):
                if hi > 0.0 and t not in seen:
                    seen.add(t)
                    stack.append(t)
    return frozenset(seen)


def choice_state_permissiveness(
    model: ImdpModel, theta: MultiStrategy, spec: Spec
) -> Optional[float]:
    """Permissiveness ratio over reachable non-target states with >= 2 actions.

    Reachability follows admitted actions over edges with upper > 0.  Returns
    None when no such choice state exists.
    """
    validate_strategy(model, theta)
    reach = reachable_states(model, theta)
    num = 0
    den = 0
    for s in reach:
        if s in spec.target or len(model.enabled(s)) < 2:
            continue
        num += len(theta[s])
        den += len(model.enabled(s))
    if den == 0:
        return None
    return num / den


def compliant_strategies(
    model: ImdpModel, theta: MultiStrategy, cap: int = DEFAULT_STRATEGY_CAP
) -> Iterator[DeterministicStrategy]:
    """Yield every deterministic strategy compliant with ``theta``.

    Strategies come in lexicographic order of per-state choices.  Raises
    StrategyCapExceeded if the product of admitted-set sizes exceeds ``cap``.
    """
    validate_strategy(model, theta)
    total = 1
    for s in range(model.n_states):
        total *= len(theta[s])
        if total > cap:
            raise StrategyCapExceeded(
                f"{total}+ compliant strategies exceed cap {cap}"
            )
    choices = [sorted(theta[s]) for s in range(model.n_states)]
    for combo in itertools.product(*choices):
        yield DeterministicStrategy(tuple(combo))


def compliant_strategy_count(model: ImdpModel, theta: MultiStrategy) -> int:
    validate_strategy(model, theta)
    total = 1
    for s in range(model.n_states):
        total *= len(theta[s])
    return total


def normalize_targets(
    model: ImdpModel, target: frozenset[int], theta: Optional[MultiStrategy] = None
) -> tuple[ImdpModel, Optional[MultiStrategy]]:
    """Rewrite target states as absorbing self-loops with reward 0.

    A target state that declared transitions keeps its first action label as
    the loop action so it still counts as a declared pair; targets that were
    already implicit stay implicit.  ``theta`` is rewritten consistently.
    """
    changed = False
    rows = list(model.rows)
    admitted = list(theta.admitted) if theta is not None else None
    for t in sorted(target):
        if not 0 <= t < model.n_states:
            raise ModelError(f"target state {t} out of range")
        old = model.rows[t]
        if len(old) == 1 and old[0].succs == (t,) and old[0].lo == (1.0,) and old[0].hi == (1.0,) and old[0].reward == 0.0:
            if admitted is not None:
                admitted[t] = frozenset((old[0].action,))
            continue
        a = old[0].action
        rows[t] = (TransitionRow(a, (t,), (1.0,), (1.0,), 0.0),)
        if admitted is not None:
            admitted[t] = frozenset((a,))
        changed = True
    if not changed and theta is None:
        return model, None
    norm = ImdpModel(
        n_states=model.n_states,
        initial=model.initial,
        actions=model.actions,
        rows=tuple(rows),
        labels=model.labels,
        state_names=model.state_names,
    )
    return norm, MultiStrategy(tuple(admitted)) if admitted is not None else None
