"""Command-line entry point: check, compile, simplify, verify, simulate, emit-smt.

Exit codes: 0 success, 1 property refuted or deadlock found, 2 the input is
malformed (syntax, types or well-formedness), 3 residual obligations remain,
4 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any

from .expr import (
    AbstractT, BoolT, EnumLit, EnumT, IntT, SeqT, Token, TypeCheckError, TypeExpr,
    value_json,
)
from .ir import show, show_program, to_json
from .machine import StMach
from .oracle import DomainSpec, event_text, find_deadlock, replay
from .parser import ParseError, parse_action, parse_expr, parse_file
from .rewriter import rewrite
from .semantics import action_prog, display_body, display_program, machine_sem
from .smt import emit_smt, smt_filename
from .verifier import DeadlockFreedom, StateInvariant, Unknown, verify
from .wellformed import IllFormedMachine, check_wf

EXIT_OK, EXIT_REFUTED, EXIT_INPUT, EXIT_RESIDUAL, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        print(text)


def _load(path: str) -> StMach:
    return parse_file(path)


def _load_wf(path: str) -> StMach:
    m = _load(path)
    report = check_wf(m)
    if not report.ok:
        raise IllFormedMachine(report)
    return m


# ---------------------------------------------------------------------------
# check / compile / simplify
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    m = _load(args.file)
    report = check_wf(m)
    _emit(args, {"machine": m.name, **report.to_json()}, f"{m.name}: {report.text()}")
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_compile(args) -> int:
    cm = machine_sem(_load_wf(args.file))
    pretty = show_program(display_program(cm))
    _emit(args, {"machine": cm.machine.name, "program": to_json(cm.program),
                 "display": to_json(display_program(cm)), "pretty": pretty}, pretty)
    return EXIT_OK


def cmd_simplify(args) -> int:
    m = _load_wf(args.file)
    cm = machine_sem(m)
    if args.action is not None:
        targets = [("action", action_prog(parse_action(args.action, m.env)))]
    else:
        names = [args.node] if args.node else list(cm.per_node)
        unknown = [n for n in names if n not in cm.per_node]
        if unknown:
            raise UsageError(f"{unknown[0]} is not a non-final node of {m.name}")
        targets = [(n, display_body(cm, cm.per_node[n])) for n in names]
    items, lines = [], []
    for name, before in targets:
        res = rewrite(before, consts=cm.consts)
        items.append({"name": name, "before": to_json(before), "after": to_json(res.term),
                      "trace": [{"rule": r, "position": list(p)} for r, p in res.trace]})
        lines.append(f"{name}:")
        lines.append(f"  before: {show(before)}")
        lines.append(f"  after:  {show(res.term)}")
        for r, p in res.trace:
            lines.append(f"    {r} at {list(p)}")
    _emit(args, {"machine": m.name, "results": items}, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / emit-smt
# ---------------------------------------------------------------------------


def _property(m: StMach, text: str):
    if text == "deadlock":
        return DeadlockFreedom()
    if text.startswith("invariant:"):
        return StateInvariant(parse_expr(text[len("invariant:"):], m.env))
    raise UsageError(f"unknown property {text!r}; use 'deadlock' or 'invariant:EXPR'")


def cmd_verify(args) -> int:
    m = _load_wf(args.file)
    report = verify(m, _property(m, args.property))
    if args.smt_dir:
        out = Path(args.smt_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in report.results:
            if args.smt_all or isinstance(r.verdict, Unknown):
                (out / smt_filename(m.name, r.obligation)).write_text(emit_smt(r.obligation))
    _emit(args, report.to_json(), report.text())
    return {"Verified": EXIT_OK, "Refuted": EXIT_REFUTED}.get(report.status, EXIT_RESIDUAL)


def cmd_emit_smt(args) -> int:
    m = _load_wf(args.file)
    report = verify(m, _property(m, args.property))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in report.results:
        path = out / smt_filename(m.name, r.obligation)
        path.write_text(emit_smt(r.obligation))
        written.append(str(path))
    _emit(args, {"machine": m.name, "files": written}, "\n".join(written))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def value_from_json(v: Any, t: TypeExpr) -> Any:
    """Decode a JSON value of type ``t`` (enum constructors by name, tokens as ``Type#i``)."""
    if isinstance(t, BoolT) and isinstance(v, bool):
        return v
    if isinstance(t, IntT) and isinstance(v, int) and not isinstance(v, bool):
        return v
    if isinstance(t, EnumT) and v in t.constructors:
        return EnumLit(t.name, v)
    if isinstance(t, AbstractT) and isinstance(v, str) and v.startswith(t.name + "#"):
        return Token(t.name, int(v.split("#", 1)[1]))
    if isinstance(t, SeqT) and isinstance(v, list):
        return tuple(value_from_json(x, t.elem) for x in v)
    raise UsageError(f"{json.dumps(v)} is not a value of type {t}")


def _load_table(m: StMach, spec: str) -> tuple[str, dict]:
    name, sep, path = spec.partition("=")
    if not sep or name not in m.env.funs:
        raise UsageError(f"--fun expects NAME=TABLEFILE for a declared function, got {spec!r}")
    params, result = m.env.funs[name]
    data = json.loads(Path(path).read_text())
    table = {}
    for args, value in data.get("entries", []):
        key = tuple(value_from_json(a, p) for a, p in zip(args, params))
        table[key] = value_from_json(value, result)
    return name, {"table": table, "default": (value_from_json(data["default"], result)
                                             if "default" in data else None)}


def _domain(args, m: StMach) -> DomainSpec:
    lo, sep, hi = args.int_range.partition("..")
    try:
        int_range = (int(lo), int(hi))
    except ValueError:
        raise UsageError(f"--int-range expects LO..HI, got {args.int_range!r}") from None
    if not sep or int_range[0] > int_range[1]:
        raise UsageError(f"--int-range expects LO..HI, got {args.int_range!r}")
    seed = args.seed
    if os.environ.get("RCVERIFY_SEED"):
        seed = int(os.environ["RCVERIFY_SEED"])
    tables, defaults = {}, {}
    for spec in args.fun or []:
        name, t = _load_table(m, spec)
        tables[name] = t["table"]
        if t["default"] is not None:
            defaults[name] = t["default"]
    return DomainSpec(int_range=int_range, seq_max=args.seq_max, seed=seed,
                      tables=tables, fun_constants=defaults)


def _decode_event(m: StMach, item: list) -> tuple:
    chan, value = item
    payload = m.env.events.get(chan)
    return (chan, None if payload is None or value is None else value_from_json(value, payload))


def cmd_simulate(args) -> int:
    m = _load_wf(args.file)
    cm = machine_sem(m)
    dom = _domain(args, m)
    if args.replay:
        saved = json.loads(Path(args.replay).read_text())
        trace = [_decode_event(m, e) for e in saved["events"]]
        ok = replay(cm, dom, trace)
        _emit(args, {"machine": m.name, "replayed": ok, "trace": [event_text(e) for e in trace]},
              f"replay of {len(trace)} event(s): " + ("deadlock reproduced" if ok else "no deadlock"))
        return EXIT_REFUTED if ok else EXIT_OK
    result = find_deadlock(cm, dom, args.depth)
    payload = {"machine": m.name, "depth": args.depth, "domain": dom.describe(),
               "explored": result.explored, "cut": result.cut, "chaos": result.chaos,
               "deadlock": result.deadlock.to_json() if result.deadlock else None}
    if result.deadlock:
        dl = result.deadlock
        text = (f"deadlock in {dl.node} after ⟨{', '.join(event_text(e) for e in dl.trace)}⟩\n"
                f"state: {dl.to_json()['state']}")
        if args.trace_out:
            Path(args.trace_out).write_text(json.dumps({
                "machine": m.name, "domain": dom.describe(), "node": dl.node,
                "events": [[c, value_json(v) if v is not None else None] for c, v in dl.trace],
            }, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        bound = " (search cut at the depth bound)" if result.cut else ""
        text = f"no deadlock within depth {args.depth}; {result.explored} configurations{bound}"
    _emit(args, payload, text)
    return EXIT_REFUTED if result.deadlock else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rcverify", description="Verify flat state machines by reactive-program semantics.")
    p.add_argument("--format", choices=("text", "json"), default="text")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def machine_cmd(name: str, fn, help: str) -> argparse.ArgumentParser:
        c = sub.add_parser(name, help=help)
        c.add_argument("file", help="machine source (.rcsm)")
        c.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
        c.set_defaults(run=fn)
        return c

    machine_cmd("check", cmd_check, "parse, type-check and check well-formedness")
    machine_cmd("compile", cmd_compile, "print the reactive-program semantics")
    c = machine_cmd("simplify", cmd_simplify, "simplify node bodies and show the rewrite trace")
    c.add_argument("--node", help="only this node")
    c.add_argument("--action", help="simplify this action text instead of node bodies")
    c = machine_cmd("verify", cmd_verify, "generate and decide proof obligations")
    c.add_argument("--property", default="deadlock", help="'deadlock' or 'invariant:EXPR'")
    c.add_argument("--smt-dir", help="write SMT-LIB scripts for residual obligations here")
    c.add_argument("--smt-all", action="store_true", help="with --smt-dir, write every obligation")
    c = machine_cmd("simulate", cmd_simulate, "search for deadlocks by bounded execution")
    c.add_argument("--depth", type=int, default=10)
    c.add_argument("--int-range", default="0..3")
    c.add_argument("--seq-max", type=int, default=2)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--fun", action="append", metavar="NAME=TABLEFILE")
    c.add_argument("--trace-out", help="write a replayable trace file on deadlock")
    c.add_argument("--replay", metavar="TRACEFILE", help="replay a saved trace instead of searching")
    c = machine_cmd("emit-smt", cmd_emit_smt, "write SMT-LIB scripts for every obligation")
    c.add_argument("--property", default="deadlock")
    c.add_argument("--out", default="smt")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except TypeCheckError as exc:
        print(f"type error: {exc}", file=sys.stderr)
    except IllFormedMachine as exc:
        print(f"ill-formed machine:\n{exc.report.text()}", file=sys.stderr)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
