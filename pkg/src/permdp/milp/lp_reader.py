"""Reader for the LP dialect produced by MilpProblem.emit_lp.

Understands the usual section layout (Maximize / Minimize, Subject To,
Bounds, Binaries / Binary / General, End), one constraint per line with an
optional ``name:`` prefix, explicit or implicit coefficients, and bounds
lines of the forms ``l <= x <= u``, ``x <= u``, ``x >= l``, ``x = v`` and
``x free``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_NUM_RE = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


class LpReadError(ValueError):
    pass


@dataclass
class LpModel:
    maximize: bool = True
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[tuple[str, dict[str, float], str, float]] = field(
        default_factory=list
    )
    lb: dict[str, float] = field(default_factory=dict)
    ub: dict[str, float] = field(default_factory=dict)
    binaries: set[str] = field(default_factory=set)
    variables: list[str] = field(default_factory=list)
    _seen: set[str] = field(default_factory=set)

    def touch(self, name: str) -> None:
        if name not in self._seen:
            self._seen.add(name)
            self.variables.append(name)


def _parse_terms(tokens: list[str], lineno: int) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    coef: float | None = None
    for tok in tokens:
        if tok == "+":
            sign, coef = 1.0, None
        elif tok == "-":
            sign, coef = -1.0, None
        elif _NUM_RE.match(tok):
            if coef is not None:
                raise LpReadError(f"line {lineno}: two numbers in a row")
            coef = sign * float(tok)
            sign = 1.0
        else:
            value = coef if coef is not None else sign
            terms[tok] = terms.get(tok, 0.0) + value
            sign, coef = 1.0, None
    if coef is not None:
        raise LpReadError(f"line {lineno}: dangling coefficient")
    return terms


def read_lp(text: str) -> LpModel:
    model = LpModel()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("maximize", "maximise", "max"):
            section, model.maximize = "obj", True
            continue
        if low in ("minimize", "minimise", "min"):
            section, model.maximize = "obj", False
            continue
        if low in ("subject to", "st", "s.t.", "such that"):
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary", "bin"):
            section = "bin"
            continue
        if low in ("general", "generals", "integers"):
            section = "bin"  # integers in [0, 1] behave as binaries here
            continue
        if low == "end":
            break
        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            for name, c in _parse_terms(body.split(), lineno).items():
                model.objective[name] = model.objective.get(name, 0.0) + c
                model.touch(name)
        elif section == "cons":
            name = f"c{len(model.constraints)}"
            body = line
            if ":" in line:
                name, body = (p.strip() for p in line.split(":", 1))
            m = re.search(r"(<=|>=|=)", body)
            if not m:
                raise LpReadError(f"line {lineno}: constraint without sense")
            sense = m.group(1)
            lhs, rhs_text = body[: m.start()], body[m.end() :]
            try:
                rhs = float(rhs_text.strip())
            except ValueError:
                raise LpReadError(
                    f"line {lineno}: non-constant right-hand side {rhs_text.strip()!r}"
                ) from None
            terms = _parse_terms(lhs.split(), lineno)
            for v in terms:
                model.touch(v)
            model.constraints.append((name, terms, sense, rhs))
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 2 and toks[1].lower() == "free":
                model.touch(toks[0])
                model.lb[toks[0]] = -np_inf
                model.ub[toks[0]] = np_inf
            elif len(toks) == 3 and toks[1] in ("<=", ">=", "="):
                name_first = not _NUM_RE.match(toks[0])
                if name_first:
                    name, val = toks[0], float(toks[2])
                    if toks[1] == "<=":
                        model.ub[name] = val
                    elif toks[1] == ">=":
                        model.lb[name] = val
                    else:
                        model.lb[name] = model.ub[name] = val
                else:
                    name, val = toks[2], float(toks[0])
                    if toks[1] == "<=":
                        model.lb[name] = val
                    elif toks[1] == ">=":
                        model.ub[name] = val
                    else:
                        model.lb[name] = model.ub[name] = val
                model.touch(name)
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                name = toks[2]
                model.lb[name] = float(toks[0])
                model.ub[name] = float(toks[4])
                model.touch(name)
            else:
                raise LpReadError(f"line {lineno}: cannot parse bounds {line!r}")
        elif section == "bin":
            for name in line.split():
                model.binaries.add(name)
                model.touch(name)
        else:
            raise LpReadError(f"line {lineno}: content before any section")
    return model


np_inf = float("inf")
