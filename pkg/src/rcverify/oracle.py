"""Bounded operational semantics of reactive programs over finite domains.

The unit of execution is :func:`stabilize`: from a configuration it follows
every silent path (state updates, conditionals, internal choice, loop
unrolling) and reports what can happen next, namely the stable waiting points
with the events they accept, the visible moves, the terminations and whether
chaos was reached.  Traces and failures are built on top by subset
construction, so internal choice is never resolved early.

An external choice keeps one local state per branch; a branch that is
miraculous, or that can only terminate, offers no stable point and therefore
removes the stable points of the whole choice.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

from .expr import (
    AbstractT, BoolT, EnumLit, EnumT, Expr, IntT, SeqT, Token, TypeEnv,
    TypeExpr, evaluate, show_value, value_json,
)
from .ir import (
    SKIP, Alternation, AssignS, Assume, Chaos, CondR, DoIn, DoIter, DoOut,
    DoSimple, ExtChoice, FrameR, Guard, Miracle, NDChoice, RProg, SeqR, SkipR,
    StopR, SubstApp, CONTROL_VAR,
)
from .expr import NAMESPACE

Event = tuple[str, Any]
State = tuple[tuple[str, Any], ...]
TICK = ("✓", None)

_PREFIX = NAMESPACE + ":"


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Finite interpretation of a type environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Carriers, function tables and constant values for one finite model."""

    int_range: tuple[int, int] = (0, 3)
    seq_max: int = 2
    abstract_tokens: int = 2
    seed: int = 0
    sampled: bool = True
    tables: Mapping[str, Mapping[tuple, Any]] = field(default_factory=dict)
    fun_constants: Mapping[str, Any] = field(default_factory=dict)
    constants: Mapping[str, Any] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.int_range, self.seq_max, self.abstract_tokens, self.seed))

    def describe(self) -> dict:
        return {
            "int_range": list(self.int_range),
            "seq_max": self.seq_max,
            "abstract_tokens": self.abstract_tokens,
            "seed": self.seed,
            "sampled": self.sampled,
            "tables": sorted(self.tables),
            "fun_constants": {k: value_json(v) for k, v in sorted(self.fun_constants.items())},
            "constants": {k: value_json(v) for k, v in sorted(self.constants.items())},
        }


# Finite models used for cross-checking verdicts: the default model, a second
# sampling seed, and a wider integer range with a third seed.
SHIPPED_DOMAINS = (
    DomainSpec(),
    DomainSpec(seed=1),
    DomainSpec(int_range=(-1, 4), seed=2),
)


def _key(args: tuple) -> str:
    return json.dumps(value_json(args))


class Interp:
    """A :class:`DomainSpec` bound to a type environment."""

    def __init__(self, env: TypeEnv, spec: DomainSpec = DomainSpec()):
        self.env = env
        self.spec = spec
        self._carriers: dict[TypeExpr, list] = {}
        self._calls: dict[tuple, Any] = {}
        self.consts = {c: self._const_value(c, t) for c, t in env.consts.items()}

    def _const_value(self, name: str, t: TypeExpr) -> Any:
        if name in self.spec.constants:
            return self.spec.constants[name]
        init = self.env.const_values.get(name)
        if init is not None:
            return evaluate(init, {})
        return self.carrier(t)[0]

    def carrier(self, t: TypeExpr) -> list:
        if t not in self._carriers:
            self._carriers[t] = self._make_carrier(t)
        return self._carriers[t]

    def _make_carrier(self, t: TypeExpr) -> list:
        if isinstance(t, BoolT):
            return [False, True]
        if isinstance(t, IntT):
            lo, hi = self.spec.int_range
            return list(range(lo, hi + 1))
        if isinstance(t, EnumT):
            return [EnumLit(t.name, c) for c in t.constructors]
        if isinstance(t, AbstractT):
            return [Token(t.name, i) for i in range(self.spec.abstract_tokens)]
        if isinstance(t, SeqT):
            if t.elem is None:
                raise DomainError("sequence of unknown element type")
            elems = self.carrier(t.elem)
            out: list = []
            for n in range(self.spec.seq_max + 1):
                out.extend(itertools.product(elems, repeat=n))
            return out
        raise DomainError(f"no finite carrier for {t}")

    def call(self, fn: str, args: tuple) -> Any:
        k = (fn, args)
        if k in self._calls:
            return self._calls[k]
        table = self.spec.tables.get(fn)
        if table is not None and args in table:
            v = table[args]
        elif fn in self.spec.fun_constants:
            v = self.spec.fun_constants[fn]
        elif self.spec.sampled:
            result = self.env.funs[fn][1]
            rng = random.Random(f"{self.spec.seed}:{fn}:{_key(args)}")
            v = rng.choice(self.carrier(result))
        else:
            raise DomainError(f"no value for {fn}{_key(args)}")
        self._calls[k] = v
        return v

    def eval(self, e: Expr, state: Mapping[str, Any]) -> Any:
        return evaluate(e, {**self.consts, **state}, self.call)

    def valuations(self, keys: Iterable[tuple[str, TypeExpr]]) -> Iterator[State]:
        keys = sorted(keys)
        for combo in itertools.product(*(self.carrier(t) for _, t in keys)):
            yield tuple((k, v) for (k, _), v in zip(keys, combo))


def mk_state(d: Mapping[str, Any]) -> State:
    return tuple(sorted(d.items()))


# ---------------------------------------------------------------------------
# Stabilisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Behaviour:
    chaos: bool = False
    waits: frozenset = frozenset()    # (accepted events, state) at stable points
    moves: frozenset = frozenset()    # (event, continuation, state)
    dones: frozenset = frozenset()    # terminal states


NOTHING = Behaviour()
CHAOTIC = Behaviour(chaos=True)


def _union(bs: Iterable[Behaviour]) -> Behaviour:
    bs = list(bs)
    if any(b.chaos for b in bs):
        return CHAOTIC
    return Behaviour(False,
                     frozenset().union(*(b.waits for b in bs)),
                     frozenset().union(*(b.moves for b in bs)),
                     frozenset().union(*(b.dones for b in bs)))


def _then(p: RProg, q: RProg) -> RProg:
    return q if isinstance(p, SkipR) else SeqR(p, q)


_IN_PROGRESS = object()
SILENT_LIMIT = 400


class Machine:
    """Executes programs against one interpretation, memoising stabilisation."""

    def __init__(self, interp: Interp):
        self.interp = interp
        self._memo: dict[tuple[RProg, State], Any] = {}
        self._depth = 0

    def stabilize(self, p: RProg, s: State) -> Behaviour:
        key = (p, s)
        hit = self._memo.get(key)
        if hit is _IN_PROGRESS:
            return CHAOTIC  # a silent cycle: divergence
        if hit is not None:
            return hit
        if self._depth > SILENT_LIMIT:
            return CHAOTIC  # unboundedly long silent run, treated as divergence
        self._memo[key] = _IN_PROGRESS
        self._depth += 1
        try:
            out = self._stabilize(p, s)
        finally:
            self._depth -= 1
        self._memo[key] = out
        return out

    def _ev(self, e: Expr, s: State) -> Any:
        return self.interp.eval(e, dict(s))

    def _stabilize(self, p: RProg, s: State) -> Behaviour:
        if isinstance(p, Miracle):
            return NOTHING
        if isinstance(p, Chaos):
            return CHAOTIC
        if isinstance(p, SkipR):
            return Behaviour(dones=frozenset({s}))
        if isinstance(p, StopR):
            return Behaviour(waits=frozenset({(frozenset(), s)}))
        if isinstance(p, AssignS):
            return Behaviour(dones=frozenset({self._assign(p.sigma.entries, s)}))
        if isinstance(p, (DoSimple, DoOut)):
            ev = (p.chan, None) if isinstance(p, DoSimple) else (p.chan, self._ev(p.value, s))
            return Behaviour(waits=frozenset({(frozenset({ev}), s)}),
                             moves=frozenset({(ev, SKIP, s)}))
        if isinstance(p, DoIn):
            payload = self.interp.env.events[p.chan]
            d = dict(s)
            moves = []
            for v in self.interp.carrier(payload):
                d[p.var.key] = v
                moves.append(((p.chan, v), SKIP, mk_state(d)))
            return Behaviour(waits=frozenset({(frozenset(m[0] for m in moves), s)}),
                             moves=frozenset(moves))
        if isinstance(p, Guard):
            return self.stabilize(p.body, s) if self._ev(p.cond, s) else self.stabilize(StopR(), s)
        if isinstance(p, CondR):
            return self.stabilize(p.then if self._ev(p.cond, s) else p.orelse, s)
        if isinstance(p, Assume):
            return Behaviour(dones=frozenset({s})) if self._ev(p.cond, s) else NOTHING
        if isinstance(p, SeqR):
            first = self.stabilize(p.first, s)
            if first.chaos:
                return CHAOTIC
            head = Behaviour(False, first.waits,
                             frozenset((e, _then(c, p.second), t) for e, c, t in first.moves))
            return _union([head] + [self.stabilize(p.second, d) for d in first.dones])
        if isinstance(p, ExtChoice):
            return self._ext(p.branches, s)
        if isinstance(p, NDChoice):
            return _union(self.stabilize(b, s) for b in p.branches)
        if isinstance(p, Alternation):
            live = [x for b, x in p.branches if self._ev(b, s)]
            return _union(self.stabilize(x, s) for x in live) if live else CHAOTIC
        if isinstance(p, DoIter):
            live = [x for b, x in p.branches if self._ev(b, s)]
            if not live:
                return Behaviour(dones=frozenset({s}))
            return _union(self.stabilize(SeqR(x, p), s) for x in live)
        if isinstance(p, FrameR):
            return self._frame(p.body, s)
        if isinstance(p, SubstApp):
            return self.stabilize(SeqR(AssignS(p.sigma), p.body), s)
        raise TypeError(p)

    def _assign(self, entries, s: State) -> State:
        d = dict(s)
        new = {k: self._ev(v, s) for k, v in entries}
        d.update(new)
        return mk_state(d)

    def _ext(self, branches: tuple[RProg, ...], s: State) -> Behaviour:
        if not branches:
            return Behaviour(waits=frozenset({(frozenset(), s)}))
        bs = [self.stabilize(b, s) for b in branches]
        if any(b.chaos for b in bs):
            return CHAOTIC
        waits = set()
        for combo in itertools.product(*(b.waits for b in bs)):
            acc = frozenset().union(*(a for a, _ in combo))
            waits.add((acc, combo[0][1]))
        return Behaviour(False, frozenset(waits),
                         frozenset().union(*(b.moves for b in bs)),
                         frozenset().union(*(b.dones for b in bs)))

    def _frame(self, body: RProg, s: State) -> Behaviour:
        outer = {k: v for k, v in s if not k.startswith(_PREFIX)}
        inner = mk_state({k[len(_PREFIX):]: v for k, v in s if k.startswith(_PREFIX)})

        def embed(t: State) -> State:
            return mk_state({**outer, **{_PREFIX + k: v for k, v in t}})

        b = self.stabilize(body, inner)
        if b.chaos:
            return CHAOTIC
        return Behaviour(False,
                         frozenset((a, embed(t)) for a, t in b.waits),
                         frozenset((e, c if isinstance(c, SkipR) else FrameR(c), embed(t)) for e, c, t in b.moves),
                         frozenset(embed(t) for t in b.dones))

    # -- single steps -------------------------------------------------------

    def step(self, p: RProg, s: State) -> set[tuple[Event, "Config"]]:
        """Visible successors: one per event, plus ``✓`` for each termination."""
        b = self.stabilize(p, s)
        out = {(e, Config(c, t)) for e, c, t in b.moves}
        out |= {(TICK, Config(SKIP, t)) for t in b.dones}
        return out


@dataclass(frozen=True)
class Config:
    control: RProg
    state: State

    def to_json(self) -> dict:
        return {"state": {k: value_json(v) for k, v in self.state}}


# ---------------------------------------------------------------------------
# Failures
# ---------------------------------------------------------------------------


def minimal_sets(sets: Iterable[frozenset]) -> frozenset:
    sets = sorted(set(sets), key=len)
    out: list[frozenset] = []
    for a in sets:
        if not any(b <= a for b in out):
            out.append(a)
    return frozenset(out)


@dataclass(frozen=True)
class TraceObs:
    """Everything observable after one trace."""

    chaos: bool
    acceptances: frozenset  # minimal accepted-event sets at stable points
    terminations: frozenset  # final states
    cut: bool = False  # moves exist beyond the depth bound

    def to_json(self) -> dict:
        return {
            "chaos": self.chaos,
            "acceptances": sorted(sorted(_event_text(e) for e in a) for a in self.acceptances),
            "terminations": sorted(json.dumps({k: value_json(v) for k, v in t}) for t in self.terminations),
            "cut": self.cut,
        }


def _event_text(e: Event) -> str:
    chan, v = e
    return chan if v is None else f"{chan}.{show_value(v)}"


def event_text(e: Event) -> str:
    return _event_text(e)


def _observe(mach: Machine, configs: frozenset) -> tuple[TraceObs, dict[Event, frozenset]]:
    """What is observable after reaching ``configs``, and where each event leads."""
    merged = _union(mach.stabilize(c, s) for c, s in configs)
    if merged.chaos:
        return TraceObs(True, frozenset(), frozenset()), {}
    nxt: dict[Event, set] = {}
    for e, c, s in merged.moves:
        nxt.setdefault(e, set()).add((c, s))
    obs = TraceObs(False, minimal_sets(a for a, _ in merged.waits), frozenset(merged.dones))
    return obs, {e: frozenset(cs) for e, cs in nxt.items()}


def failures(p: RProg, interp: Interp, depth: int, init: State = (),
             machine: Machine | None = None) -> dict[tuple[Event, ...], TraceObs]:
    """Observations for every trace of at most ``depth`` events."""
    mach = machine or Machine(interp)
    out: dict[tuple[Event, ...], TraceObs] = {}
    todo = deque([((), frozenset({(p, init)}))])
    while todo:
        trace, configs = todo.popleft()
        obs, nxt = _observe(mach, configs)
        if len(trace) >= depth and nxt:
            obs = TraceObs(obs.chaos, obs.acceptances, obs.terminations, True)
        out[trace] = obs
        if len(trace) < depth:
            for e, cs in nxt.items():
                todo.append((trace + (e,), cs))
    return out


class ObsTree:
    """The observation tree below one trace, shared between equal subtrees.

    Trees are interned per :class:`TreeBuilder`, so two trees are equal exactly
    when they are the same object.
    """

    __slots__ = ("obs", "kids")

    def __init__(self, obs: TraceObs, kids: dict[Event, "ObsTree"]):
        self.obs = obs
        self.kids = kids


class TreeBuilder:
    """Builds interned observation trees, memoised on (configurations, depth left)."""

    def __init__(self, interp: Interp, machine: Machine | None = None):
        self.mach = machine or Machine(interp)
        self._memo: dict[tuple[frozenset, int], ObsTree] = {}
        self._interned: dict[tuple, ObsTree] = {}

    def tree(self, p: RProg, init: State, depth: int) -> ObsTree:
        return self._tree(frozenset({(p, init)}), depth)

    def _tree(self, configs: frozenset, left: int) -> ObsTree:
        key = (configs, left)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        obs, nxt = _observe(self.mach, configs)
        if left == 0:
            if nxt:
                obs = TraceObs(obs.chaos, obs.acceptances, obs.terminations, True)
            kids = {}
        else:
            kids = {e: self._tree(cs, left - 1) for e, cs in nxt.items()}
        ident = (obs, frozenset((e, id(k)) for e, k in kids.items()))
        node = self._interned.get(ident)
        if node is None:
            node = self._interned[ident] = ObsTree(obs, kids)
        self._memo[key] = node
        return node


def _first_difference(a: ObsTree, b: ObsTree) -> tuple:
    """Shortest trace after which two different trees disagree."""
    todo = deque([((), a, b)])
    while todo:
        trace, x, y = todo.popleft()
        if x is y:
            continue
        if x is None or y is None or x.obs != y.obs or set(x.kids) != set(y.kids):
            return (trace, x and x.obs, y and y.obs)
        for e in x.kids:
            todo.append((trace + (e,), x.kids[e], y.kids.get(e)))
    raise ValueError("trees are identical")


@dataclass(frozen=True)
class EquivResult:
    equal: bool
    init: State = ()
    trace: tuple = ()
    left: TraceObs | None = None
    right: TraceObs | None = None

    def __bool__(self) -> bool:
        return self.equal

    def describe(self) -> str:
        if self.equal:
            return "equivalent"
        return (f"differ from {dict(self.init)} after ⟨{', '.join(map(_event_text, self.trace))}⟩: "
                f"{self.left} vs {self.right}")


def equiv(p: RProg, q: RProg, interp: Interp, depth: int,
          inits: Iterable[State] = ((),), builder: TreeBuilder | None = None) -> EquivResult:
    """Compare the observation trees of ``p`` and ``q`` from each initial state."""
    builder = builder or TreeBuilder(interp)
    for init in inits:
        tp = builder.tree(p, init, depth)
        tq = builder.tree(q, init, depth)
        if tp is not tq:
            trace, left, right = _first_difference(tp, tq)
            return EquivResult(False, init, trace, left, right)
    return EquivResult(True)


# ---------------------------------------------------------------------------
# Deadlock search on compiled machines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deadlock:
    trace: tuple[Event, ...]
    config: Config

    @property
    def node(self) -> str:
        v = dict(self.config.state).get(CONTROL_VAR)
        return v.constructor if isinstance(v, EnumLit) else str(v)

    def to_json(self) -> dict:
        return {"trace": [_event_text(e) for e in self.trace], "node": self.node,
                "state": self.config.to_json()["state"]}


@dataclass(frozen=True)
class SearchResult:
    deadlock: Deadlock | None
    explored: int
    cut: bool  # some configuration had moves beyond the depth bound
    chaos: bool


def initial_states(cm, interp: Interp) -> list[State]:
    """Every valuation of the machine variables; ``actv`` starts at the initial node."""
    keys = [(f"{_PREFIX}{v}", t) for v, t in cm.machine.env.vars.items()]
    start = cm.node_value(cm.machine.init)
    return [mk_state({**dict(s), CONTROL_VAR: start}) for s in interp.valuations(keys)]


def find_deadlock(cm, spec: DomainSpec, depth: int) -> SearchResult:
    """Breadth-first search for the shortest trace reaching a stable point that accepts nothing."""
    interp = Interp(cm.env, spec)
    mach = Machine(interp)
    parent: dict[tuple, tuple | None] = {}
    frontier = []
    for s in initial_states(cm, interp):
        key = (cm.program, s)
        if key not in parent:
            parent[key] = None
            frontier.append(key)
    cut = chaos = False
    for level in range(depth + 1):
        nxt = []
        for key in frontier:
            b = mach.stabilize(*key)
            if b.chaos:
                chaos = True
                continue
            for acc, s in sorted(b.waits, key=repr):
                if not acc:
                    return SearchResult(Deadlock(_trace_to(parent, key), Config(key[0], s)),
                                        len(parent), cut, chaos)
            for e, c, s in sorted(b.moves, key=repr):
                child = (c, s)
                if child in parent:
                    continue
                if level == depth:
                    cut = True
                    continue
                parent[child] = (key, e)
                nxt.append(child)
        frontier = nxt
        if not frontier:
            break
    return SearchResult(None, len(parent), cut, chaos)


def _trace_to(parent: dict, key) -> tuple[Event, ...]:
    out = []
    while parent[key] is not None:
        key, e = parent[key]
        out.append(e)
    return tuple(reversed(out))


def replay(cm, spec: DomainSpec, trace: Iterable[Event]) -> bool:
    """Does ``trace`` lead (from some initial state) to a stable point accepting nothing?"""
    interp = Interp(cm.env, spec)
    mach = Machine(interp)
    configs = {(cm.program, s) for s in initial_states(cm, interp)}
    for e in trace:
        nxt = set()
        for c, s in configs:
            nxt |= {(c2, s2) for e2, c2, s2 in mach.stabilize(c, s).moves if e2 == e}
        configs = nxt
    return any(not acc for c, s in configs for acc, _ in mach.stabilize(c, s).waits)
