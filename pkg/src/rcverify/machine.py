"""Static meta-model of flat state machines and its canonical text form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .expr import (
    TRUE, AbstractT, BoolT, EnumT, Expr, IntT, SeqT, TypeCheckError, TypeEnv,
    TypeExpr, Var, check_bool, compatible, to_text, type_check,
)

RESERVED_VAR = "actv"

# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Simple:
    chan: str


@dataclass(frozen=True)
class Input:
    chan: str
    var: str


@dataclass(frozen=True)
class Output:
    chan: str
    value: Expr


EventSyn = Union[Simple, Input, Output]


@dataclass(frozen=True)
class EventAct:
    event: EventSyn


@dataclass(frozen=True)
class SkipAct:
    pass


@dataclass(frozen=True)
class AssignAct:
    var: str
    value: Expr


@dataclass(frozen=True)
class SeqAct:
    first: "ActionSyn"
    second: "ActionSyn"


@dataclass(frozen=True)
class IfAct:
    cond: Expr
    then: "ActionSyn"
    orelse: "ActionSyn"


ActionSyn = Union[EventAct, SkipAct, AssignAct, SeqAct, IfAct]

SKIP = SkipAct()


def seq_actions(actions: list[ActionSyn]) -> ActionSyn:
    """Right-nested sequence; the empty list is ``skip``."""
    if not actions:
        return SKIP
    out = actions[-1]
    for a in reversed(actions[:-1]):
        out = SeqAct(a, out)
    return out


def flatten_seq(a: ActionSyn) -> list[ActionSyn]:
    if isinstance(a, SeqAct):
        return flatten_seq(a.first) + flatten_seq(a.second)
    return [a]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NodeDecl:
    nname: str
    nentry: ActionSyn = SKIP
    nexit: ActionSyn = SKIP


@dataclass(frozen=True)
class TransDecl:
    tid: str
    src: str
    tgt: str
    trig: EventSyn | None = None
    cond: Expr = TRUE
    act: ActionSyn = SKIP


@dataclass(frozen=True)
class StMach:
    name: str
    env: TypeEnv
    init: str
    finals: tuple[str, ...] = ()
    nodes: tuple[NodeDecl, ...] = ()
    transs: tuple[TransDecl, ...] = ()
    # declaration order of the source text, kept so printing is canonical
    var_order: tuple[str, ...] = field(default=(), compare=False)
    const_order: tuple[str, ...] = field(default=(), compare=False)
    event_order: tuple[str, ...] = field(default=(), compare=False)

    def node_names(self) -> list[str]:
        return [n.nname for n in self.nodes]


# ---------------------------------------------------------------------------
# Static checks on actions (types, assignability)
# ---------------------------------------------------------------------------


def check_event(env: TypeEnv, ev: EventSyn) -> None:
    if ev.chan not in env.events:
        raise TypeCheckError(f"unknown event {ev.chan}", ev)
    payload = env.events[ev.chan]
    if isinstance(ev, Simple):
        if payload is not None:
            raise TypeCheckError(f"event {ev.chan} carries a {payload} value", ev)
        return
    if payload is None:
        raise TypeCheckError(f"event {ev.chan} carries no value", ev)
    if isinstance(ev, Input):
        _check_assignable(env, ev.var, payload, ev)
    else:
        t = type_check(env, ev.value)
        if not compatible(t, payload):
            raise TypeCheckError(f"{ev.chan} carries {payload}, got {t}", ev)


def _check_assignable(env: TypeEnv, var: str, t: TypeExpr, where) -> None:
    if var == RESERVED_VAR:
        raise TypeCheckError("actv is reserved for the machine control state", where)
    if var not in env.vars:
        what = "constant" if var in env.consts else "unknown variable"
        raise TypeCheckError(f"cannot assign to {what} {var}", where)
    if not compatible(env.vars[var], t):
        raise TypeCheckError(f"cannot assign {t} to {var} : {env.vars[var]}", where)


def check_action(env: TypeEnv, a: ActionSyn) -> None:
    if isinstance(a, EventAct):
        check_event(env, a.event)
    elif isinstance(a, AssignAct):
        _check_assignable(env, a.var, type_check(env, a.value), a)
    elif isinstance(a, SeqAct):
        check_action(env, a.first)
        check_action(env, a.second)
    elif isinstance(a, IfAct):
        check_bool(env, a.cond)
        check_action(env, a.then)
        check_action(env, a.orelse)


def check_machine_types(m: StMach) -> None:
    for n in m.nodes:
        check_action(m.env, n.nentry)
        check_action(m.env, n.nexit)
    for t in m.transs:
        if t.trig is not None:
            check_event(m.env, t.trig)
        check_bool(m.env, t.cond)
        check_action(m.env, t.act)


def action_exprs(a: ActionSyn) -> Iterator[Expr]:
    if isinstance(a, EventAct) and isinstance(a.event, Output):
        yield a.event.value
    elif isinstance(a, AssignAct):
        yield a.value
    elif isinstance(a, SeqAct):
        yield from action_exprs(a.first)
        yield from action_exprs(a.second)
    elif isinstance(a, IfAct):
        yield a.cond
        yield from action_exprs(a.then)
        yield from action_exprs(a.orelse)


# ---------------------------------------------------------------------------
# Canonical text
# ---------------------------------------------------------------------------


def type_text(t: TypeExpr) -> str:
    if isinstance(t, BoolT):
        return "bool"
    if isinstance(t, IntT):
        return "int"
    if isinstance(t, SeqT):
        return f"Seq({type_text(t.elem)})"
    assert isinstance(t, (EnumT, AbstractT))
    return t.name


def event_text(ev: EventSyn) -> str:
    if isinstance(ev, Simple):
        return ev.chan
    if isinstance(ev, Input):
        return f"{ev.chan}?{ev.var}"
    return f"{ev.chan}!{_atomic_text(ev.value)}"


def _atomic_text(e: Expr) -> str:
    s = to_text(e)
    return s if isinstance(e, Var) or s.isdigit() else f"({s})"


def action_text(a: ActionSyn) -> str:
    if isinstance(a, SkipAct):
        return "skip"
    if isinstance(a, EventAct):
        return event_text(a.event)
    if isinstance(a, AssignAct):
        return f"{a.var} := {to_text(a.value)}"
    if isinstance(a, SeqAct):
        return "; ".join(action_text(x) for x in flatten_seq(a))
    assert isinstance(a, IfAct)
    return (f"if {to_text(a.cond)} then {action_text(a.then)} "
            f"else {action_text(a.orelse)} end")


def _ordered(names, table) -> list[str]:
    seen = [n for n in names if n in table]
    return seen + sorted(n for n in table if n not in seen)


def pretty_print(m: StMach) -> str:
    """Canonical source text; ``parse(pretty_print(m)) == m``."""
    env = m.env
    out: list[str] = []
    for t in env.types.values():
        if isinstance(t, EnumT):
            out.append(f"enum {t.name} = {' | '.join(t.constructors)}")
        elif isinstance(t, AbstractT):
            out.append(f"abstract {t.name}")
    for name, (params, result) in env.funs.items():
        out.append(f"function {name}({', '.join(type_text(p) for p in params)}) : {type_text(result)}")
    if out:
        out.append("")
    out.append(f"statemachine {m.name}")
    out.append("  vars")
    for v in _ordered(m.var_order, env.vars):
        out.append(f"    {v} : {type_text(env.vars[v])}")
    if env.consts:
        out.append("  consts")
        for c in _ordered(m.const_order, env.consts):
            init = env.const_values.get(c)
            suffix = f" = {to_text(init)}" if init is not None else ""
            out.append(f"    {c} : {type_text(env.consts[c])}{suffix}")
    out.append("  events")
    for e in _ordered(m.event_order, env.events):
        payload = env.events[e]
        out.append(f"    {e}" + (f" : {type_text(payload)}" if payload is not None else ""))
    out.append("  states")
    for n in m.nodes:
        line = f"    {n.nname}"
        if n.nentry != SKIP:
            line += f" entry {action_text(n.nentry)}"
        if n.nexit != SKIP:
            line += f" exit {action_text(n.nexit)}"
        out.append(line)
    out.append(f"  initial {m.init}")
    out.append("  finals" + "".join(f" {f}" for f in m.finals))
    out.append("  transitions")
    for t in m.transs:
        line = f"    {t.tid} from {t.src} to {t.tgt}"
        if t.trig is not None:
            line += f" trigger {event_text(t.trig)}"
        if t.cond != TRUE:
            line += f" condition {to_text(t.cond)}"
        if t.act != SKIP:
            line += f" action {action_text(t.act)}"
        out.append(line)
    return "\n".join(out) + "\n"


def machine_vars(m: StMach) -> list[Var]:
    return [Var(v) for v in _ordered(m.var_order, m.env.vars)]
