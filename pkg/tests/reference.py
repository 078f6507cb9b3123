"""A direct interpreter for state machines, used as an independent trace oracle."""

from __future__ import annotations

import itertools

from rcverify.ir import EPS
from rcverify.machine import AssignAct, EventAct, IfAct, Input, Output, SeqAct, Simple, SkipAct
from rcverify.oracle import Interp


def run_action(interp: Interp, a, s: dict):
    """All ways to run ``a`` from ``s``: (events performed, final state)."""
    if isinstance(a, SkipAct):
        return [((), s)]
    if isinstance(a, AssignAct):
        return [((), {**s, a.var: interp.eval(a.value, s)})]
    if isinstance(a, EventAct):
        return run_event(interp, a.event, s)
    if isinstance(a, SeqAct):
        out = []
        for ev1, s1 in run_action(interp, a.first, s):
            for ev2, s2 in run_action(interp, a.second, s1):
                out.append((ev1 + ev2, s2))
        return out
    if isinstance(a, IfAct):
        return run_action(interp, a.then if interp.eval(a.cond, s) else a.orelse, s)
    raise TypeError(a)


def run_event(interp: Interp, ev, s: dict):
    if ev is None:
        return [(((EPS, None),), s)]
    if isinstance(ev, Simple):
        return [(((ev.chan, None),), s)]
    if isinstance(ev, Output):
        return [(((ev.chan, interp.eval(ev.value, s)),), s)]
    assert isinstance(ev, Input)
    t = interp.env.events[ev.chan]
    return [(((ev.chan, v),), {**s, ev.var: v}) for v in interp.carrier(t)]


def machine_traces(m, interp: Interp, depth: int) -> set:
    """Every event trace of at most ``depth`` events, from every initial valuation."""
    out: set = set()
    keys = sorted(m.env.vars)
    finals = set(m.finals)
    transs = {}
    for t in m.transs:
        transs.setdefault(t.src, []).append(t)
    nodes = {n.nname: n for n in m.nodes}

    def record(trace):
        for i in range(min(len(trace), depth) + 1):
            out.add(trace[:i])

    def visit(node: str, s: dict, trace: tuple):
        record(trace)
        if len(trace) >= depth or node in finals:
            return
        n = nodes[node]
        for ev1, s1 in run_action(interp, n.nentry, s):
            t1 = trace + ev1
            record(t1)
            if len(t1) >= depth:
                continue
            for t in transs.get(node, []):
                if not interp.eval(t.cond, s1):
                    continue
                for ev2, s2 in run_event(interp, t.trig, s1):
                    for ev3, s3 in run_action(interp, n.nexit, s2):
                        for ev4, s4 in run_action(interp, t.act, s3):
                            visit(t.tgt, s4, t1 + ev2 + ev3 + ev4)

    for combo in itertools.product(*(interp.carrier(m.env.vars[k]) for k in keys)):
        visit(m.init, dict(zip(keys, combo)), ())
    return out
