"""Command-line front end.

Exit codes: 0 success / satisfied, 2 usage error, 3 robust satisfaction
violated (verify), 10 no robust multi-strategy exists (synth), 1 internal
failure.  Infeasibility gets its own code because "no robust multi-strategy
exists" is a meaningful verdict for scripts, not an error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .bench import GENERATORS, gen_nav3, run_suite, suite_to_csv, suite_to_text
from .milp.encode import build_dual_encoding, build_vertex_encoding
from .milp.solve import SolverConfig
from .model import ModelError
from .robust import check_robust_satisfaction
from .synth import SynthConfig, report_json_dict, report_text, synthesize
from .synth import sweep_epsilon, sweep_to_csv
from .textio import (
    ParseError,
    SpecError,
    StrategyFileError,
    parse_model,
    parse_spec,
    parse_strategy,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_VIOLATED = 3
EXIT_NO_STRATEGY = 10


class UsageError(Exception):
    pass


def _load_model(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_model(fh.read())
    except OSError as e:
        raise UsageError(f"cannot read model file: {e}") from None
    except ParseError as e:
        raise UsageError(f"{path}: {e}") from None


def _solver_config(args) -> SolverConfig:
    backend = args.backend
    if backend not in ("builtin", "external") and "{lp_file}" not in backend:
        raise UsageError(
            "backend must be 'builtin', 'external', or a command template "
            "with {lp_file} and {sol_file}"
        )
    return SolverConfig(backend=backend, time_cap_seconds=args.time_cap)


def _parse_eps_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("epsilon grid must be start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError("epsilon grid must be numeric") from None
    if step <= 0 or stop < start:
        raise UsageError("epsilon grid must have positive step and stop >= start")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 12) for i in range(n + 1)]


def cmd_synth(args) -> int:
    model = _load_model(args.model)
    try:
        spec = parse_spec(args.spec, model)
    except SpecError as e:
        raise UsageError(str(e)) from None
    config = SynthConfig(
        encoding=args.encoding,
        solver=_solver_config(args),
        check_maximality=not args.no_maximality,
    )
    report = synthesize(model, spec, config)
    text = report_text(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report_json_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if report.feasible else EXIT_NO_STRATEGY


def cmd_verify(args) -> int:
    model = _load_model(args.model)
    try:
        spec = parse_spec(args.spec, model)
    except SpecError as e:
        raise UsageError(str(e)) from None
    try:
        with open(args.strategy, "r", encoding="utf-8") as fh:
            theta = parse_strategy(fh.read(), model)
    except OSError as e:
        raise UsageError(f"cannot read strategy file: {e}") from None
    except StrategyFileError as e:
        raise UsageError(str(e)) from None
    result = check_robust_satisfaction(model, theta, spec)
    if result.satisfied:
        print(f"satisfied: {result.detail}")
        return EXIT_OK
    print(f"violated: {result.detail}")
    return EXIT_VIOLATED


def cmd_sweep(args) -> int:
    if args.domain != "nav3":
        raise UsageError("sweep currently supports --domain nav3")
    grid = _parse_eps_grid(args.eps)

    def factory(eps: float):
        inst = gen_nav3(eps)
        return inst.model, inst.spec

    actions = args.actions.split(",") if args.actions else None
    rows = sweep_epsilon(factory, grid, actions)
    csv = sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def cmd_bench(args) -> int:
    instances = []
    for domain in args.domain:
        if domain not in GENERATORS:
            raise UsageError(f"unknown domain {domain!r}; choices: {sorted(GENERATORS)}")
        if domain == "nav3":
            instances.append(gen_nav3(args.epsilon, p=args.p))
        elif domain == "obs":
            instances.append(
                GENERATORS["obs"](args.grid, args.steps, args.epsilon, args.seed, p=args.p)
            )
        elif domain == "sav":
            instances.append(GENERATORS["sav"](args.grid, args.epsilon, args.seed, p=args.p))
        elif domain == "aca":
            instances.append(GENERATORS["aca"](args.branch, args.epsilon, args.seed, p=args.p))
        elif domain == "wh":
            instances.append(GENERATORS["wh"](args.steps, args.epsilon))
    encodings = tuple(args.encoding.split(","))
    config = SynthConfig(solver=_solver_config(args))
    rows = run_suite(instances, encodings, config)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(suite_to_csv(rows))
    sys.stdout.write(suite_to_text(rows))
    return EXIT_OK


def cmd_export_lp(args) -> int:
    model = _load_model(args.model)
    try:
        spec = parse_spec(args.spec, model)
    except SpecError as e:
        raise UsageError(str(e)) from None
    builder = build_vertex_encoding if args.encoding == "vertex" else build_dual_encoding
    problem = builder(model, spec)
    with open(args.out, "w", encoding="utf-8") as fh:
        problem.emit_lp(fh)
    print(
        f"wrote {problem.n_constraints} constraints, {problem.n_vars} variables to {args.out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="permdp",
        description="Robust permissive controller synthesis for interval MDPs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_backend(p):
        p.add_argument("--backend", default="builtin", help="builtin, external, or a command template")
        p.add_argument("--time-cap", type=float, default=None, help="solver wall-clock cap in seconds")

    p = sub.add_parser("synth", help="synthesize a robust maximally permissive multi-strategy")
    p.add_argument("model", help="model file")
    p.add_argument("--spec", required=True, help='e.g. \'P>=0.65 [F "goal"]\'')
    p.add_argument("--encoding", choices=("vertex", "dual"), default="vertex")
    p.add_argument("--out", help="write the text report here")
    p.add_argument("--json", help="write a machine-readable report here")
    p.add_argument("--no-maximality", action="store_true", help="skip maximality checking")
    add_backend(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check robust satisfaction of a multi-strategy")
    p.add_argument("model")
    p.add_argument("--spec", required=True)
    p.add_argument("--strategy", required=True, help="file with '<state>: <action> ...' lines")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="min/max robust values per action over an epsilon grid")
    p.add_argument("--domain", default="nav3")
    p.add_argument("--eps", required=True, help="grid as start:stop:step")
    p.add_argument("--actions", help="comma-separated action labels (default: all at initial)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="run benchmark instances and report a table")
    p.add_argument("--domain", action="append", required=True, help="repeatable: nav3 obs sav aca wh")
    p.add_argument("--grid", type=int, default=3)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--branch", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--encoding", default="vertex,dual")
    p.add_argument("--out", help="CSV output path")
    add_backend(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-lp", help="write an encoding as an LP file")
    p.add_argument("model")
    p.add_argument("--spec", required=True)
    p.add_argument("--encoding", choices=("vertex", "dual"), default="vertex")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_lp)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, SpecError, StrategyFileError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
