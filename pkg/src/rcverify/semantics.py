"""Compile a well-formed state machine into a reactive program.

The machine becomes ``actv := init ; do actv = N → body(N) | ... od`` with one
branch per non-final node.  Node bodies are kept in a canonical, unexpanded
shape ``r:⟨entry⟩ ; (□ transitions)`` so that later stages can pattern-match
them; :func:`display_body` expands frames for presentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import TRUE, EnumT, EnumLit, TypeEnv, Var, eq
from .ir import (
    CONTROL_VAR, EPS, SKIP, DoIn, DoIter, DoOut, DoSimple, ExtChoice,
    FrameR, Guard, RProg, SeqR, CondR, assign, do_iter, seq,
)
from .machine import (
    ActionSyn, AssignAct, EventAct, EventSyn, IfAct, Input, NodeDecl,
    SeqAct, Simple, SkipAct, StMach, TransDecl,
)
from .wellformed import MachineViews, views


def control_type(m: StMach) -> EnumT:
    return EnumT(f"{m.name}_Node", tuple(m.node_names()))


def event_prog(ev: EventSyn | None) -> RProg:
    """A trigger or action event; the missing trigger becomes ``ε``."""
    if ev is None:
        return DoSimple(EPS)
    if isinstance(ev, Simple):
        return DoSimple(ev.chan)
    if isinstance(ev, Input):
        return DoIn(ev.chan, Var(ev.var))
    return DoOut(ev.chan, ev.value)


def action_prog(a: ActionSyn) -> RProg:
    if isinstance(a, SkipAct):
        return SKIP
    if isinstance(a, EventAct):
        return event_prog(a.event)
    if isinstance(a, AssignAct):
        return assign(a.var, a.value)
    if isinstance(a, SeqAct):
        return SeqR(action_prog(a.first), action_prog(a.second))
    if isinstance(a, IfAct):
        return CondR(action_prog(a.then), a.cond, action_prog(a.orelse))
    raise TypeError(a)


@dataclass(frozen=True)
class CompiledMachine:
    machine: StMach
    program: RProg
    env: TypeEnv
    control: EnumT
    per_node: dict[str, RProg] = field(hash=False)
    views: MachineViews = field(hash=False)

    def node_value(self, name: str) -> EnumLit:
        return EnumLit(self.control.name, name)

    @property
    def consts(self) -> frozenset[str]:
        return frozenset(self.env.consts)


def trans_sem(m: StMach, node: NodeDecl, t: TransDecl) -> RProg:
    inner = seq(event_prog(t.trig), action_prog(node.nexit), action_prog(t.act))
    if t.cond != TRUE:
        inner = Guard(t.cond, inner)
    target = EnumLit(control_type(m).name, t.tgt)
    return SeqR(FrameR(inner), assign(CONTROL_VAR, target))


def node_sem(m: StMach, vs: MachineViews, node: NodeDecl) -> RProg:
    alts = tuple(trans_sem(m, node, t) for t in vs.tmap[node.nname])
    return SeqR(FrameR(action_prog(node.nentry)), ExtChoice(alts))


def machine_sem(m: StMach) -> CompiledMachine:
    vs = views(m)
    ctl = control_type(m)
    per_node = {n.nname: node_sem(m, vs, n) for n in vs.inters}
    loop = do_iter(
        (eq(Var(CONTROL_VAR), EnumLit(ctl.name, n.nname)), per_node[n.nname])
        for n in vs.inters
    )
    program = SeqR(assign(CONTROL_VAR, EnumLit(ctl.name, m.init)), loop)
    env = m.env.with_vars({CONTROL_VAR: ctl}).with_types({ctl.name: ctl})
    return CompiledMachine(m, program, env, ctl, per_node, vs)


def display_body(cm: CompiledMachine, body: RProg) -> RProg:
    from .rewriter import DISPLAY_RULES, rewrite
    return rewrite(body, DISPLAY_RULES, consts=cm.consts).term


def display_program(cm: CompiledMachine) -> RProg:
    """The compiled program with frames expanded and trivial structure removed."""
    init, loop = cm.program.first, cm.program.second
    assert isinstance(loop, DoIter)
    return SeqR(init, DoIter(tuple((b, display_body(cm, p)) for b, p in loop.branches)))
