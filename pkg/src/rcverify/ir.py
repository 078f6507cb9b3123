"""Reactive-program terms: events, state updates, guards, choices and iteration.

Two node kinds exist only for the rewriter and the law suite: ``FrameR(P)`` is
an unexpanded frame extension ``r:⟨P⟩`` and ``SubstApp(σ, P)`` a pending
substitution ``σ † P``.  The compiler never leaves either in its output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Collection, Iterable, Iterator, Union

from .expr import (
    NAMESPACE, TRUE, Expr, IntLit, BoolLit, EnumLit, EmptySeq, Subst, TypeEnv,
    TypeCheckError, Var, check_bool, disj, expr_from_json, expr_to_json,
    map_vars, neg, subst_check, to_display, type_check, compatible,
)

EPS = "ε"
CONTROL_VAR = "actv"


def _node(cls):
    """Frozen dataclass whose hash is computed once; terms get hashed a lot."""
    cls = dataclass(frozen=True)(cls)
    field_hash = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = field_hash(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    cls.__str__ = lambda self: show(self)
    return cls


@_node
class Miracle:
    pass


@_node
class Chaos:
    pass


@_node
class SkipR:
    pass


@_node
class StopR:
    pass


@_node
class AssignS:
    sigma: Subst


@_node
class DoSimple:
    chan: str


@_node
class DoOut:
    chan: str
    value: Expr


@_node
class DoIn:
    chan: str
    var: Var


@_node
class Guard:
    cond: Expr
    body: "RProg"


@_node
class SeqR:
    first: "RProg"
    second: "RProg"


@_node
class CondR:
    then: "RProg"
    cond: Expr
    orelse: "RProg"


@_node
class ExtChoice:
    branches: tuple["RProg", ...]


@_node
class NDChoice:
    branches: tuple["RProg", ...]


@_node
class Assume:
    cond: Expr


@_node
class Alternation:
    branches: tuple[tuple[Expr, "RProg"], ...]


@_node
class DoIter:
    branches: tuple[tuple[Expr, "RProg"], ...]


@_node
class FrameR:
    body: "RProg"


@_node
class SubstApp:
    sigma: Subst
    body: "RProg"


RProg = Union[Miracle, Chaos, SkipR, StopR, AssignS, DoSimple, DoOut, DoIn, Guard,
              SeqR, CondR, ExtChoice, NDChoice, Assume, Alternation, DoIter,
              FrameR, SubstApp]

MIRACLE = Miracle()
CHAOS = Chaos()
SKIP = SkipR()
STOP = StopR()


class NonProductiveError(ValueError):
    pass


class FrameError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Smart constructors
# ---------------------------------------------------------------------------


def seq(*ps: RProg) -> RProg:
    """Right-nested sequential composition; ``seq()`` is ``Skip``."""
    if not ps:
        return SKIP
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = SeqR(p, out)
    return out


def assign(key: str, value: Expr) -> AssignS:
    return AssignS(Subst.of({key: value}))


def _check_guard(env: TypeEnv | None, b: Expr) -> None:
    if env is not None:
        check_bool(env, b)


def gcmd(b: Expr, p: RProg, env: TypeEnv | None = None) -> RProg:
    """Naked guarded command: ``P`` when ``b`` holds, miraculous otherwise."""
    _check_guard(env, b)
    return CondR(p, b, MIRACLE)


def assume(b: Expr, env: TypeEnv | None = None) -> Assume:
    _check_guard(env, b)
    return Assume(b)


def unfold_assume(a: Assume) -> RProg:
    return gcmd(a.cond, SKIP)


def alternation(branches: Iterable[tuple[Expr, RProg]], env: TypeEnv | None = None) -> RProg:
    """Nondeterministic choice of guarded commands, chaotic when no guard holds."""
    branches = tuple(branches)
    if not branches:
        return CHAOS
    for b, _ in branches:
        _check_guard(env, b)
    arms = [gcmd(b, p) for b, p in branches]
    arms.append(gcmd(neg(disj(b for b, _ in branches)), CHAOS))
    return NDChoice(tuple(arms))


def do_iter(branches: Iterable[tuple[Expr, RProg]], env: TypeEnv | None = None) -> DoIter:
    branches = tuple(branches)
    for i, (b, p) in enumerate(branches):
        _check_guard(env, b)
        if not productive(p):
            raise NonProductiveError(f"branch {i} ({to_display(b)}) can terminate without an event")
    return DoIter(branches)


def productive(p: RProg) -> bool:
    """Every terminating run of ``p`` performs at least one event (syntactic check)."""
    if isinstance(p, (DoSimple, DoOut, DoIn, Miracle, StopR, Chaos)):
        return True
    if isinstance(p, (SkipR, AssignS, Assume, DoIter)):
        return False
    if isinstance(p, SeqR):
        return productive(p.first) or productive(p.second)
    if isinstance(p, (Guard, FrameR, SubstApp)):
        return productive(p.body)
    if isinstance(p, CondR):
        return productive(p.then) and productive(p.orelse)
    if isinstance(p, (ExtChoice, NDChoice)):
        return all(productive(b) for b in p.branches)
    if isinstance(p, Alternation):
        return all(productive(b) for _, b in p.branches)
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Traversal
# ---------------------------------------------------------------------------


def sub_progs(p: RProg) -> tuple[RProg, ...]:
    if isinstance(p, (Guard, FrameR, SubstApp)):
        return (p.body,)
    if isinstance(p, SeqR):
        return (p.first, p.second)
    if isinstance(p, CondR):
        return (p.then, p.orelse)
    if isinstance(p, (ExtChoice, NDChoice)):
        return p.branches
    if isinstance(p, (Alternation, DoIter)):
        return tuple(b for _, b in p.branches)
    return ()


def walk(p: RProg) -> Iterator[RProg]:
    yield p
    for c in sub_progs(p):
        yield from walk(c)


def exprs_of(p: RProg) -> Iterator[Expr]:
    """Expressions occurring directly in ``p`` (not in sub-programs)."""
    if isinstance(p, AssignS):
        yield from (v for _, v in p.sigma.entries)
    elif isinstance(p, SubstApp):
        yield from (v for _, v in p.sigma.entries)
    elif isinstance(p, DoOut):
        yield p.value
    elif isinstance(p, DoIn):
        yield p.var
    elif isinstance(p, (Guard, CondR, Assume)):
        yield p.cond
    elif isinstance(p, (Alternation, DoIter)):
        yield from (b for b, _ in p.branches)


def map_exprs(p: RProg, fe: Callable[[Expr], Expr],
              fk: Callable[[str], str] = lambda k: k) -> RProg:
    """Homomorphically rewrite every expression (``fe``) and assigned key (``fk``)."""
    def sig(s: Subst) -> Subst:
        return Subst.of({fk(k): fe(v) for k, v in s.entries})

    def go(q: RProg) -> RProg:
        if isinstance(q, AssignS):
            return AssignS(sig(q.sigma))
        if isinstance(q, DoOut):
            return DoOut(q.chan, fe(q.value))
        if isinstance(q, DoIn):
            return DoIn(q.chan, Var.from_key(fk(q.var.key)))
        if isinstance(q, Guard):
            return Guard(fe(q.cond), go(q.body))
        if isinstance(q, SeqR):
            return SeqR(go(q.first), go(q.second))
        if isinstance(q, CondR):
            return CondR(go(q.then), fe(q.cond), go(q.orelse))
        if isinstance(q, ExtChoice):
            return ExtChoice(tuple(go(b) for b in q.branches))
        if isinstance(q, NDChoice):
            return NDChoice(tuple(go(b) for b in q.branches))
        if isinstance(q, Assume):
            return Assume(fe(q.cond))
        if isinstance(q, Alternation):
            return Alternation(tuple((fe(b), go(x)) for b, x in q.branches))
        if isinstance(q, DoIter):
            return DoIter(tuple((fe(b), go(x)) for b, x in q.branches))
        if isinstance(q, FrameR):
            return FrameR(go(q.body))
        if isinstance(q, SubstApp):
            return SubstApp(sig(q.sigma), go(q.body))
        return q

    return go(p)


def check_guards(env: TypeEnv, p: RProg) -> None:
    """Type-check every expression of ``p``; guards and conditions must be boolean."""
    for q in walk(p):
        if isinstance(q, (Guard, CondR, Assume)):
            check_bool(env, q.cond)
        elif isinstance(q, (Alternation, DoIter)):
            for b, _ in q.branches:
                check_bool(env, b)
        elif isinstance(q, (AssignS, SubstApp)):
            subst_check(env, q.sigma)
        elif isinstance(q, DoOut):
            payload = env.events.get(q.chan)
            if payload is None or not compatible(type_check(env, q.value), payload):
                raise TypeCheckError(f"bad output on {q.chan}", q)
        elif isinstance(q, DoIn):
            payload = env.events.get(q.chan)
            if payload is None or not compatible(env.var_type(q.var), payload):
                raise TypeCheckError(f"bad input on {q.chan}", q)


# ---------------------------------------------------------------------------
# Frame extension
# ---------------------------------------------------------------------------


def qualify_expr(e: Expr, consts: Collection[str] = ()) -> Expr:
    def q(v: Var) -> Expr:
        if v.ns is not None:
            raise FrameError(f"{v.key} is already qualified")
        if v.name == CONTROL_VAR:
            raise FrameError("actv is not visible inside a frame")
        return v if v.name in consts else Var(v.name, NAMESPACE)
    return map_vars(e, q)


def qualify_key(key: str) -> str:
    if key == CONTROL_VAR:
        raise FrameError("actv is not visible inside a frame")
    if ":" in key:
        raise FrameError(f"{key} is already qualified")
    return f"{NAMESPACE}:{key}"


def frame_extend(p: RProg, consts: Collection[str] = ()) -> RProg:
    """Expand ``r:⟨P⟩``: every state variable of ``P`` moves into namespace ``r``."""
    if any(isinstance(q, FrameR) for q in walk(p)):
        raise FrameError("nested frame extension")
    return map_exprs(p, lambda e: qualify_expr(e, consts), qualify_key)


# ---------------------------------------------------------------------------
# Display
# ---------------------------------------------------------------------------


def _event_arg(e: Expr) -> str:
    s = to_display(e)
    if isinstance(e, (IntLit, BoolLit, EnumLit, EmptySeq)) or (isinstance(e, Var) and e.ns is None):
        return s
    return f"({s})"


def show(p: RProg, ctx: int = 0) -> str:
    """One-line mathematical rendering; ``ctx`` controls parenthesisation."""
    if isinstance(p, Miracle):
        return "Miracle"
    if isinstance(p, Chaos):
        return "Chaos"
    if isinstance(p, SkipR):
        return "Skip"
    if isinstance(p, StopR):
        return "Stop"
    if isinstance(p, AssignS):
        if len(p.sigma) == 1:
            (k, v), = p.sigma.entries
            return f"{k} := {to_display(v)}"
        return str(p.sigma)
    if isinstance(p, DoSimple):
        return p.chan
    if isinstance(p, DoOut):
        return f"{p.chan}!{_event_arg(p.value)}"
    if isinstance(p, DoIn):
        return f"{p.chan}?{_event_arg(p.var)}"
    if isinstance(p, Assume):
        return f"[{to_display(p.cond)}]"
    if isinstance(p, SeqR):
        parts = []
        q: RProg = p
        while isinstance(q, SeqR):
            parts.append(show(q.first, 2))
            q = q.second
        parts.append(show(q, 2))
        s = " ; ".join(parts)
        return f"({s})" if ctx > 1 else s
    if isinstance(p, Guard):
        s = f"{_guard_text(p.cond)} ▷ {show(p.body, 1)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(p, CondR):
        s = f"{show(p.then, 2)} ◁ {to_display(p.cond)} ▷ {show(p.orelse, 2)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(p, (ExtChoice, NDChoice)):
        op = " □ " if isinstance(p, ExtChoice) else " ⊓ "
        if not p.branches:
            return "□{}" if isinstance(p, ExtChoice) else "⊓{}"
        return "(" + op.join(show(b, 1) for b in p.branches) + ")"
    if isinstance(p, (Alternation, DoIter)):
        kw = ("if", "fi") if isinstance(p, Alternation) else ("do", "od")
        arms = " | ".join(f"{to_display(b)} → {show(x, 1)}" for b, x in p.branches)
        return f"{kw[0]} {arms} {kw[1]}"
    if isinstance(p, FrameR):
        return f"{NAMESPACE}:⟨{show(p.body)}⟩"
    if isinstance(p, SubstApp):
        return f"{p.sigma} † {show(p.body, 2)}"
    raise TypeError(p)


def _guard_text(b: Expr) -> str:
    s = to_display(b)
    return f"({s})" if s.startswith("¬") else s


def show_program(p: RProg) -> str:
    """Multi-line rendering with one line per iteration branch."""
    lines: list[str] = []
    prefix: list[RProg] = []
    q = p
    while isinstance(q, SeqR) and not isinstance(q.first, DoIter):
        prefix.append(q.first)
        q = q.second
    if isinstance(q, SeqR):
        loop, rest = q.first, q.second
    else:
        loop, rest = q, None
    if not isinstance(loop, DoIter):
        return show(p)
    for x in prefix:
        lines.append(show(x, 2) + " ;")
    lines.append("do")
    for i, (b, body) in enumerate(loop.branches):
        lead = "    " if i == 0 else "  | "
        lines.append(f"{lead}{to_display(b)} → {show(body, 1)}")
    lines.append("od" + (f" ; {show(rest, 2)}" if rest is not None else ""))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _subst_json(s: Subst) -> list:
    return [[k, expr_to_json(v)] for k, v in s.entries]


def _subst_from(d: list) -> Subst:
    return Subst.of({k: expr_from_json(v) for k, v in d})


_NULLARY = {Miracle: "miracle", Chaos: "chaos", SkipR: "skip", StopR: "stop"}
_NULLARY_BACK = {v: k() for k, v in _NULLARY.items()}


def to_json(p: RProg) -> Any:
    """Stable JSON form: an operator tag plus its fields and children."""
    if type(p) in _NULLARY:
        return {"op": _NULLARY[type(p)]}
    if isinstance(p, AssignS):
        return {"op": "assign", "subst": _subst_json(p.sigma)}
    if isinstance(p, DoSimple):
        return {"op": "event", "chan": p.chan}
    if isinstance(p, DoOut):
        return {"op": "send", "chan": p.chan, "value": expr_to_json(p.value)}
    if isinstance(p, DoIn):
        return {"op": "receive", "chan": p.chan, "var": p.var.key}
    if isinstance(p, Guard):
        return {"op": "guard", "cond": expr_to_json(p.cond), "args": [to_json(p.body)]}
    if isinstance(p, SeqR):
        return {"op": "seq", "args": [to_json(p.first), to_json(p.second)]}
    if isinstance(p, CondR):
        return {"op": "cond", "cond": expr_to_json(p.cond),
                "args": [to_json(p.then), to_json(p.orelse)]}
    if isinstance(p, ExtChoice):
        return {"op": "extchoice", "args": [to_json(b) for b in p.branches]}
    if isinstance(p, NDChoice):
        return {"op": "ndchoice", "args": [to_json(b) for b in p.branches]}
    if isinstance(p, Assume):
        return {"op": "assume", "cond": expr_to_json(p.cond)}
    if isinstance(p, (Alternation, DoIter)):
        return {"op": "alt" if isinstance(p, Alternation) else "do",
                "branches": [{"guard": expr_to_json(b), "body": to_json(x)} for b, x in p.branches]}
    if isinstance(p, FrameR):
        return {"op": "frame", "args": [to_json(p.body)]}
    if isinstance(p, SubstApp):
        return {"op": "substapp", "subst": _subst_json(p.sigma), "args": [to_json(p.body)]}
    raise TypeError(p)


def from_json(d: Any) -> RProg:
    op = d["op"]
    if op in _NULLARY_BACK:
        return _NULLARY_BACK[op]
    args = [from_json(a) for a in d.get("args", [])]
    if op == "assign":
        return AssignS(_subst_from(d["subst"]))
    if op == "event":
        return DoSimple(d["chan"])
    if op == "send":
        return DoOut(d["chan"], expr_from_json(d["value"]))
    if op == "receive":
        return DoIn(d["chan"], Var.from_key(d["var"]))
    if op == "guard":
        return Guard(expr_from_json(d["cond"]), args[0])
    if op == "seq":
        return SeqR(*args)
    if op == "cond":
        return CondR(args[0], expr_from_json(d["cond"]), args[1])
    if op == "extchoice":
        return ExtChoice(tuple(args))
    if op == "ndchoice":
        return NDChoice(tuple(args))
    if op == "assume":
        return Assume(expr_from_json(d["cond"]))
    if op in ("alt", "do"):
        branches = tuple((expr_from_json(b["guard"]), from_json(b["body"])) for b in d["branches"])
        return Alternation(branches) if op == "alt" else DoIter(branches)
    if op == "frame":
        return FrameR(args[0])
    if op == "substapp":
        return SubstApp(_subst_from(d["subst"]), args[0])
    raise ValueError(f"unknown IR operator {op}")


__all__ = [name for name in dir() if not name.startswith("_")] + ["TRUE"]
