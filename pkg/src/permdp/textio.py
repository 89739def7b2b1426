"""Plain-text model format, specification strings, and strategy files.

Model grammar (UTF-8, line oriented, ``#`` starts a comment):

    imdp <num_states>
    actions <label> <label> ...
    initial <state>
    label "<name>" <state> <state> ...
    trans <state> <action> <succ> [<lo>, <hi>]
    reward <state> <action> <value>

A bare number in a trans record is shorthand for a point interval, so
ordinary MDPs are a special case.  States with no trans records become
absorbing self-loops when the model is assembled.

Specification strings: ``P>=p [F "label"]``, ``P<=p``, ``R>=b``, ``R<=b``.
Strategy files: one line per state, ``<state>: <action> <action> ...``;
states without a line admit every enabled action.
"""

from __future__ import annotations

import io
import re
from typing import Optional

from .model import (
    ImdpModel,
    ModelError,
    MultiStrategy,
    Spec,
    SpecKind,
    full_strategy,
    make_model,
    validate_model,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


def _fmt(value: float) -> str:
    return f"{value:.17g}"


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_INTERVAL_RE = re.compile(rf"^\[\s*({_NUM})\s*,\s*({_NUM})\s*\]$")
_NUM_RE = re.compile(rf"^{_NUM}$")


def _tokenize(line: str) -> list[tuple[str, int]]:
    """Split a line into (token, column) pairs, keeping intervals together."""
    out = []
    i = 0
    n = len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        if line[i] == "#":
            break
        if line[i] == "[":
            j = line.find("]", i)
            if j < 0:
                raise_col = i + 1
                raise ParseError("unterminated interval", 0, raise_col)
            out.append((line[i : j + 1], i + 1))
            i = j + 1
            continue
        if line[i] == '"':
            j = line.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string", 0, i + 1)
            out.append((line[i : j + 1], i + 1))
            i = j + 1
            continue
        j = i
        while j < n and not line[j].isspace() and line[j] not in "#":
            j += 1
        out.append((line[i:j], i + 1))
        i = j
    return out


def parse_model(text) -> ImdpModel:
    """Parse the model format into a validated ImdpModel.

    Fails with the first syntax or semantic error, reporting line and column.
    """
    if isinstance(text, io.TextIOBase):
        text = text.read()
    n_states: Optional[int] = None
    actions: list[str] = []
    action_index: dict[str, int] = {}
    initial: Optional[int] = None
    labels: dict[str, list[int]] = {}
    transitions: dict[tuple[int, int], list[tuple[int, float, float]]] = {}
    seen_triples: set[tuple[int, int, int]] = set()
    rewards: dict[tuple[int, int], float] = {}

    def err(msg: str, lineno: int, col: int = 1):
        raise ParseError(msg, lineno, col)

    def want_int(tok: str, lineno: int, col: int, what: str) -> int:
        if not re.fullmatch(r"\d+", tok):
            err(f"expected {what}, got {tok!r}", lineno, col)
        return int(tok)

    def want_state(tok: str, lineno: int, col: int) -> int:
        s = want_int(tok, lineno, col, "state index")
        if n_states is None or s >= n_states:
            err(f"state {s} not declared (model has {n_states} states)", lineno, col)
        return s

    def want_action(tok: str, lineno: int, col: int) -> int:
        if tok not in action_index:
            err(f"undeclared action {tok!r}", lineno, col)
        return action_index[tok]

    lines = text.splitlines()
    any_directive = False
    for lineno, raw in enumerate(lines, start=1):
        try:
            toks = _tokenize(raw)
        except ParseError as e:
            raise ParseError(e.reason, lineno, e.column) from None
        if not toks:
            continue
        any_directive = True
        head, col0 = toks[0]
        rest = toks[1:]
        if head == "imdp":
            if n_states is not None:
                err("duplicate header", lineno, col0)
            if len(rest) != 1:
                err("header takes exactly one state count", lineno, col0)
            n_states = want_int(rest[0][0], lineno, rest[0][1], "state count")
            if n_states <= 0:
                err("state count must be positive", lineno, rest[0][1])
        elif head == "actions":
            if n_states is None:
                err("missing header before actions", lineno, col0)
            if not rest:
                err("actions line declares no labels", lineno, col0)
            for tok, col in rest:
                if tok in action_index:
                    err(f"duplicate action label {tok!r}", lineno, col)
                action_index[tok] = len(actions)
                actions.append(tok)
        elif head == "initial":
            if n_states is None:
                err("missing header before initial", lineno, col0)
            if len(rest) != 1:
                err("initial takes exactly one state", lineno, col0)
            initial = want_state(rest[0][0], lineno, rest[0][1])
        elif head == "label":
            if n_states is None:
                err("missing header before label", lineno, col0)
            if not rest or not (rest[0][0].startswith('"') and rest[0][0].endswith('"')):
                err('label needs a quoted "<name>"', lineno, col0)
            name = rest[0][0][1:-1]
            if name in labels:
                err(f"duplicate label {name!r}", lineno, rest[0][1])
            members = [want_state(tok, lineno, col) for tok, col in rest[1:]]
            if not members:
                err(f"label {name!r} lists no states", lineno, rest[0][1])
            labels[name] = members
        elif head == "trans":
            if n_states is None:
                err("missing header before trans", lineno, col0)
            if len(rest) != 4:
                err("trans takes <state> <action> <succ> <interval>", lineno, col0)
            s = want_state(rest[0][0], lineno, rest[0][1])
            a = want_action(rest[1][0], lineno, rest[1][1])
            t = want_state(rest[2][0], lineno, rest[2][1])
            tok, col = rest[3]
            m = _INTERVAL_RE.match(tok)
            if m:
                lo, hi = float(m.group(1)), float(m.group(2))
            elif _NUM_RE.match(tok):
                lo = hi = float(tok)
            else:
                err(f"expected interval or number, got {tok!r}", lineno, col)
            if (s, a, t) in seen_triples:
                err(f"duplicate transition ({s}, {actions[a]}, {t})", lineno, col0)
            seen_triples.add((s, a, t))
            transitions.setdefault((s, a), []).append((t, lo, hi))
        elif head == "reward":
            if n_states is None:
                err("missing header before reward", lineno, col0)
            if len(rest) != 3:
                err("reward takes <state> <action> <value>", lineno, col0)
            s = want_state(rest[0][0], lineno, rest[0][1])
            a = want_action(rest[1][0], lineno, rest[1][1])
            tok, col = rest[2]
            if not _NUM_RE.match(tok):
                err(f"expected number, got {tok!r}", lineno, col)
            if (s, a) in rewards:
                err(f"duplicate reward for ({s}, {actions[a]})", lineno, col0)
            rewards[(s, a)] = float(tok)
        else:
            err(f"unknown directive {head!r}", lineno, col0)

    if n_states is None:
        raise ParseError("missing header", max(1, len(lines)), 1)
    if initial is None:
        raise ParseError("missing initial state", len(lines), 1)
    for (s, a) in rewards:
        if (s, a) not in transitions:
            raise ParseError(
                f"reward for ({s}, {actions[a]}) without transitions", len(lines), 1
            )
    try:
        model = make_model(n_states, initial, actions, transitions, rewards, labels)
    except ModelError as e:
        raise ParseError(str(e), len(lines), 1) from None
    diags = validate_model(model)
    if diags:
        raise ParseError("; ".join(str(d) for d in diags), len(lines), 1)
    return model


def write_model(model: ImdpModel) -> str:
    """Canonical serialization; parse(write(m)) is structurally equal to m.

    Implicit self-loop rows are derived, not written.
    """
    out = [f"imdp {model.n_states}"]
    if model.actions:
        out.append("actions " + " ".join(model.actions))
    out.append(f"initial {model.initial}")
    for name in sorted(model.labels):
        members = " ".join(str(s) for s in sorted(model.labels[name]))
        out.append(f'label "{name}" {members}')
    for s in range(model.n_states):
        for r in model.rows[s]:
            if r.implicit:
                continue
            a = model.actions[r.action]
            for t, lo, hi in zip(r.succs, r.lo, r.hi):
                out.append(f"trans {s} {a} {t} [{_fmt(lo)}, {_fmt(hi)}]")
    for s in range(model.n_states):
        for r in model.rows[s]:
            if not r.implicit and r.reward != 0.0:
                out.append(f"reward {s} {model.actions[r.action]} {_fmt(r.reward)}")
    return "\n".join(out) + "\n"


_SPEC_RE = re.compile(
    rf"^\s*([PR])\s*(>=|<=)\s*({_NUM})\s*\[\s*F\s+\"([^\"]+)\"\s*\]\s*$"
)

_SPEC_KINDS = {
    ("P", ">="): SpecKind.PROB_GE,
    ("P", "<="): SpecKind.PROB_LE,
    ("R", ">="): SpecKind.REW_GE,
    ("R", "<="): SpecKind.REW_LE,
}


class SpecError(ValueError):
    pass


def parse_spec(text: str, model: ImdpModel) -> Spec:
    """Parse one specification line, resolving the label against the model."""
    m = _SPEC_RE.match(text)
    if not m:
        raise SpecError(
            f'cannot parse specification {text!r}; expected e.g. P>=0.65 [F "goal"]'
        )
    letter, rel, num, label = m.groups()
    kind = _SPEC_KINDS[(letter, rel)]
    threshold = float(num)
    if kind.is_prob and not 0.0 <= threshold <= 1.0:
        raise SpecError(f"probability threshold {threshold:g} outside [0, 1]")
    if not kind.is_prob and threshold < 0.0:
        raise SpecError(f"reward threshold {threshold:g} is negative")
    if label not in model.labels:
        raise SpecError(f"unknown label {label!r}")
    return Spec(kind=kind, threshold=threshold, target=frozenset(model.labels[label]))


class StrategyFileError(ValueError):
    pass


def parse_strategy(text: str, model: ImdpModel) -> MultiStrategy:
    """Read admitted actions per state; omitted states admit everything."""
    admitted = list(full_strategy(model).admitted)
    seen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise StrategyFileError(f"line {lineno}: expected '<state>: <actions>'")
        left, right = line.split(":", 1)
        try:
            s = int(left.strip())
        except ValueError:
            raise StrategyFileError(f"line {lineno}: bad state index {left.strip()!r}")
        if not 0 <= s < model.n_states:
            raise StrategyFileError(f"line {lineno}: state {s} out of range")
        if s in seen:
            raise StrategyFileError(f"line {lineno}: duplicate state {s}")
        seen.add(s)
        labels = right.split()
        if not labels:
            raise StrategyFileError(f"line {lineno}: state {s} admits no action")
        acts = set()
        enabled = set(model.enabled(s))
        for lab in labels:
            if lab not in model.actions:
                raise StrategyFileError(f"line {lineno}: unknown action {lab!r}")
            a = model.actions.index(lab)
            if a not in enabled:
                raise StrategyFileError(
                    f"line {lineno}: action {lab!r} not enabled in state {s}"
                )
            acts.add(a)
        admitted[s] = frozenset(acts)
    return MultiStrategy(tuple(admitted))


def write_strategy(model: ImdpModel, theta: MultiStrategy) -> str:
    out = []
    for s in range(model.n_states):
        if model.is_implicit(s):
            continue
        labels = " ".join(model.action_label(a) for a in sorted(theta[s]))
        out.append(f"{s}: {labels}")
    return "\n".join(out) + "\n"
