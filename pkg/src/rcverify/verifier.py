"""Proof obligations for compiled machines and a small decision procedure.

Each machine yields one obligation for the initial node and one per non-final
node.  For deadlock freedom the obligation says that after every way through
the entry action some outgoing transition is enabled; for a state invariant it
says that the invariant survives one pass through the node.

Obligations are closed universal formulas.  :func:`decide` abstracts the
maximal uninterpreted subterms (variables and function applications) to
unknowns and enumerates a finite set of valuations that is complete for the
fragment at hand.  Anything outside that fragment is searched for a concrete
counterexample and otherwise left to an external solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping

from .expr import (
    EQ_OPS, FALSE, ORD_OPS, TRUE, AbstractT, App, BinOp, BoolLit, BoolT, EmptySeq,
    EnumLit, EnumT, Expr, Forall, IntLit, IntT, SeqT, Token, TypeEnv, TypeExpr,
    UnOp, Var, apply_op, conj, constant_fold, free_vars, implies,
    is_literal, map_vars, show_value, subst_apply, to_display, type_check,
    value_json, Subst, _offset,
)
from .ir import CONTROL_VAR
from .machine import (
    ActionSyn, AssignAct, EventAct, EventSyn, IfAct, Input, SeqAct, SkipAct, StMach,
)
from .oracle import DomainSpec
from .rewriter import normalize_node
from .semantics import CompiledMachine, machine_sem

ENUM_LIMIT = 1_000_000
SEARCH_INTS = range(-2, 7)


class PropertyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Properties and obligations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeadlockFreedom:
    def describe(self) -> str:
        return "deadlock"


@dataclass(frozen=True)
class StateInvariant:
    inv: Expr

    def describe(self) -> str:
        return f"invariant:{to_display(self.inv)}"


Property = DeadlockFreedom | StateInvariant


@dataclass(frozen=True)
class Obligation:
    kind: str  # "InitEstablishes" or "NodePreserves"
    node: str
    formula: Expr
    env: TypeEnv = field(compare=False, repr=False)
    provenance: str = ""

    @property
    def bound(self) -> tuple[tuple[str, TypeExpr], ...]:
        return self.formula.bound if isinstance(self.formula, Forall) else ()

    @property
    def body(self) -> Expr:
        return self.formula.body if isinstance(self.formula, Forall) else self.formula


def _unqualify(e: Expr) -> Expr:
    return map_vars(e, lambda v: Var(v.name) if v.ns is not None else v)


def _close(m: StMach, body: Expr, fresh: Mapping[str, TypeExpr]) -> Expr:
    """Fix initialised constants and quantify every remaining free name."""
    env = m.env
    known = {c: v for c, v in env.const_values.items() if v is not None}
    body = constant_fold(map_vars(body, lambda v: known.get(v.name, v) if v.ns is None else v))
    names = free_vars(body)
    order = list(m.var_order) + [v for v in env.vars if v not in m.var_order]
    order += list(m.const_order) + [c for c in env.consts if c not in m.const_order]
    order += list(fresh)
    types = {**env.vars, **env.consts, **fresh}
    prefix = tuple((n, types[n]) for n in dict.fromkeys(order) if n in names)
    return Forall(prefix, body) if prefix else body


def _deadlock_formula(cm: CompiledMachine, node: str) -> tuple[Expr, dict[str, TypeExpr]]:
    nf = normalize_node(cm.per_node[node], cm.env)
    parts, fresh = [], {}
    for path in nf.paths:
        parts.append(implies(path.cond, nf.enabled(path)))
        fresh.update(dict(path.inputs))
    return _unqualify(constant_fold(conj(*parts))), fresh


class _Fresh:
    def __init__(self):
        self.n = 0
        self.types: dict[str, TypeExpr] = {}

    def new(self, base: str, t: TypeExpr) -> str:
        self.n += 1
        name = f"{base}#{self.n}"
        self.types[name] = t
        return name


def _wp_event(ev: EventSyn | None, q: Expr, env: TypeEnv, fresh: _Fresh) -> Expr:
    if isinstance(ev, Input):
        name = fresh.new(ev.var, env.vars[ev.var])
        return subst_apply(Subst.of({ev.var: Var(name)}), q)
    return q


def wp(a: ActionSyn, q: Expr, env: TypeEnv, fresh: _Fresh | None = None) -> Expr:
    """Weakest precondition of a straight-line action; inputs become fresh names."""
    fresh = fresh or _Fresh()
    if isinstance(a, SkipAct):
        return q
    if isinstance(a, AssignAct):
        return subst_apply(Subst.of({a.var: a.value}), q)
    if isinstance(a, EventAct):
        return _wp_event(a.event, q, env, fresh)
    if isinstance(a, SeqAct):
        return wp(a.first, wp(a.second, q, env, fresh), env, fresh)
    if isinstance(a, IfAct):
        return conj(implies(a.cond, wp(a.then, q, env, fresh)),
                    implies(UnOp("not", a.cond), wp(a.orelse, q, env, fresh)))
    raise TypeError(a)


def _invariant_body(m: StMach, cm: CompiledMachine, node: str, inv: Expr, fresh: _Fresh) -> Expr:
    decl = cm.views.nmap[node]
    parts = []
    for t in cm.views.tmap[node]:
        after = wp(t.act, inv, m.env, fresh)
        after = wp(decl.nexit, after, m.env, fresh)
        after = _wp_event(t.trig, after, m.env, fresh)
        parts.append(implies(t.cond, after))
    return wp(decl.nentry, conj(*parts), m.env, fresh)


def gen_obligations(cm: CompiledMachine, prop: Property) -> list[Obligation]:
    m = cm.machine
    init = cm.views.ninit.nname
    nodes = [n.nname for n in cm.views.inters]
    out: list[Obligation] = []
    if isinstance(prop, DeadlockFreedom):
        for kind, node in [("InitEstablishes", init)] + [("NodePreserves", n) for n in nodes]:
            body, fresh = _deadlock_formula(cm, node)
            env = m.env.with_vars(fresh)
            out.append(Obligation(kind, node, _close(m, body, fresh), env,
                                  f"{kind} for {node}: entry paths enable a transition"))
        return out
    inv = prop.inv
    if any(v.name == CONTROL_VAR for v in map(Var.from_key, free_vars(inv))):
        raise PropertyError("the invariant may not mention actv")
    type_check(m.env, inv)
    for kind, node in [("InitEstablishes", init)] + [("NodePreserves", n) for n in nodes]:
        fresh = _Fresh()
        body = _invariant_body(m, cm, node, inv, fresh)
        if kind == "NodePreserves":
            body = implies(inv, body)
        env = m.env.with_vars(fresh.types)
        out.append(Obligation(kind, node, _close(m, constant_fold(body), fresh.types), env,
                              f"{kind} for {node}: invariant after one pass"))
    return out


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Valid:
    procedure: str  # folding, boolean-abstraction, enum-enumeration or order-enumeration

    def to_json(self) -> dict:
        return {"result": "Valid", "procedure": self.procedure}


@dataclass(frozen=True)
class Invalid:
    witness: tuple[tuple[Expr, Any], ...]

    def to_json(self) -> dict:
        return {"result": "Invalid",
                "witness": {to_display(a): value_json(v) for a, v in self.witness}}

    def text(self) -> str:
        return ", ".join(f"{to_display(a)} ↦ {show_value(v)}" for a, v in self.witness) or "(empty)"


@dataclass(frozen=True)
class Unknown:
    reason: str
    smt: str = ""

    def to_json(self) -> dict:
        return {"result": "Unknown", "reason": self.reason}


Verdict = Valid | Invalid | Unknown


def _atoms(e: Expr, out: dict[Expr, None]) -> None:
    if isinstance(e, (Var, App)):
        out.setdefault(e)
    elif isinstance(e, UnOp):
        _atoms(e.arg, out)
    elif isinstance(e, BinOp):
        _atoms(e.left, out)
        _atoms(e.right, out)


def _literals(e: Expr, out: dict[Expr, None]) -> None:
    if is_literal(e):
        out.setdefault(e)
    elif isinstance(e, UnOp):
        _literals(e.arg, out)
    elif isinstance(e, BinOp):
        _literals(e.left, out)
        _literals(e.right, out)


def _eval(e: Expr, asg: Mapping[Expr, Any]) -> Any:
    if e in asg:
        return asg[e]
    if isinstance(e, (IntLit, BoolLit)):
        return e.value
    if isinstance(e, EnumLit):
        return e
    if isinstance(e, EmptySeq):
        return ()
    if isinstance(e, UnOp):
        v = _eval(e.arg, asg)
        return (not v) if e.op == "not" else -v
    if isinstance(e, BinOp):
        return apply_op(e.op, _eval(e.left, asg), _eval(e.right, asg))
    raise ValueError(f"unassigned term {to_display(e)}")


def _linear(e: Expr, ints: set[Expr]) -> tuple[Expr | None, int] | None:
    """``atom + k`` as ``(atom, k)``, a literal as ``(None, k)``, anything else ``None``."""
    base, k = _offset(e)
    if isinstance(base, IntLit):
        return None, base.value + k
    if base in ints:
        return base, k
    return None


def _order_points(e: Expr, ints: set[Expr], points: set[int]) -> bool:
    """Are integer atoms used only in comparisons ``atom + k ⋈ literal`` or ``atom ⋈ atom``?

    Collects the critical points ``literal - k`` on the way.
    """
    if e in ints:
        return False
    if isinstance(e, UnOp):
        return _order_points(e.arg, ints, points)
    if not isinstance(e, BinOp):
        return True
    if e.op in EQ_OPS | ORD_OPS and (_mentions(e.left, ints) or _mentions(e.right, ints)):
        l, r = _linear(e.left, ints), _linear(e.right, ints)
        if l is None or r is None:
            return False
        (la, lk), (ra, rk) = l, r
        if la is not None and ra is not None:
            return lk == rk
        points.add(rk - lk if la is not None else lk - rk)
        return True
    return _order_points(e.left, ints, points) and _order_points(e.right, ints, points)


def _mentions(e: Expr, ints: set[Expr]) -> bool:
    if e in ints:
        return True
    if isinstance(e, UnOp):
        return _mentions(e.arg, ints)
    if isinstance(e, BinOp):
        return _mentions(e.left, ints) or _mentions(e.right, ints)
    return False


def _int_candidates(points: set[int], n: int) -> list[int]:
    if not points:
        return list(range(n))
    ps = sorted(points)
    out = set(ps)
    out.update(ps[0] - i for i in range(1, n + 1))
    out.update(ps[-1] + i for i in range(1, n + 1))
    for a, b in zip(ps, ps[1:]):
        out.update(range(a + 1, min(a + n, b - 1) + 1))
    return sorted(out)


def _fresh_values(t: TypeExpr, literals: list[Expr], n: int) -> list:
    lits = [_eval(l, {}) for l in literals]
    if isinstance(t, AbstractT):
        return lits + [Token(t.name, i) for i in range(n)]
    # sequences: the empty literal plus n distinct non-empty ones
    elem = t.elem
    if isinstance(elem, (AbstractT,)):
        fresh = [(Token(elem.name, 0),) * (i + 1) for i in range(n)]
    elif isinstance(elem, EnumT):
        fresh = [(EnumLit(elem.name, elem.constructors[0]),) * (i + 1) for i in range(n)]
    elif isinstance(elem, BoolT):
        fresh = [(False,) * (i + 1) for i in range(n)]
    else:
        fresh = [(0,) * (i + 1) for i in range(n)]
    return lits + fresh


def _realizable(asg: Mapping[Expr, Any]) -> bool:
    """Every function gets one value across its applications, so a constant table realises it."""
    seen: dict[str, Any] = {}
    for a, v in asg.items():
        if isinstance(a, App):
            if a.fn in seen and seen[a.fn] != v:
                return False
            seen[a.fn] = v
    return True


def decide(ob: Obligation, smt_name: str | None = None) -> Verdict:
    from .smt import emit_smt
    body = constant_fold(ob.body)
    if body == TRUE:
        return Valid("folding")
    if body == FALSE:
        return Invalid(())
    bound = dict(ob.bound)
    env = ob.env

    def typ(e: Expr) -> TypeExpr:
        return type_check(env, e, bound)

    found: dict[Expr, None] = {}
    _atoms(body, found)
    atoms = list(found)
    lits: dict[Expr, None] = {}
    _literals(body, lits)
    types = {a: typ(a) for a in atoms}
    ints = {a for a in atoms if isinstance(types[a], IntT)}
    points: set[int] = set()
    pure = _order_points(body, ints, points)
    domains = []
    for a in atoms:
        t = types[a]
        same = [a2 for a2 in atoms if types[a2] == t]
        if isinstance(t, BoolT):
            domains.append([False, True])
        elif isinstance(t, EnumT):
            domains.append([EnumLit(t.name, c) for c in t.constructors])
        elif isinstance(t, IntT):
            if pure:
                domains.append(_int_candidates(points, len(ints)))
            else:
                domains.append(sorted(set(SEARCH_INTS) | {p + d for p in points for d in (-1, 0, 1)}))
        else:
            tl = [l for l in lits if isinstance(l, EmptySeq)] if isinstance(t, SeqT) else []
            domains.append(_fresh_values(t, tl, len(same)))
    size = 1
    for d in domains:
        size *= len(d)
    if size > ENUM_LIMIT:
        return Unknown("valuation space too large", emit_smt(ob))
    spurious = False
    for combo in itertools.product(*domains):
        asg = dict(zip(atoms, combo))
        if _eval(body, asg):
            continue
        if _realizable(asg):
            return Invalid(tuple(asg.items()))
        spurious = True
    if spurious:
        return Unknown("counterexamples need distinct values of one function", emit_smt(ob))
    if ints and not pure:
        return Unknown("integer arithmetic beyond order constraints", emit_smt(ob))
    if all(isinstance(types[a], BoolT) for a in atoms):
        return Valid("boolean-abstraction")
    if ints:
        return Valid("order-enumeration")
    return Valid("enum-enumeration")


def witness_domain(ob: Obligation, verdict: Invalid, base: DomainSpec = DomainSpec()) -> DomainSpec:
    """A finite model agreeing with the counterexample: constant tables, pinned constants."""
    funs = {a.fn: v for a, v in verdict.witness if isinstance(a, App)}
    consts = {a.name: v for a, v in verdict.witness
              if isinstance(a, Var) and a.name in ob.env.consts}
    ints = [v for _, v in verdict.witness if isinstance(v, int) and not isinstance(v, bool)]
    lo, hi = base.int_range
    lo, hi = min([lo] + ints), max([hi] + ints)
    tokens = max([base.abstract_tokens] + [v.index + 1 for _, v in verdict.witness if isinstance(v, Token)])
    return DomainSpec(int_range=(lo, hi), seq_max=base.seq_max, abstract_tokens=tokens,
                      seed=base.seed, fun_constants=funs, constants=consts)


def check_witness(ob: Obligation, verdict: Invalid) -> bool:
    """The counterexample falsifies the obligation body under direct evaluation."""
    return _eval(constant_fold(ob.body), dict(verdict.witness)) is False


# ---------------------------------------------------------------------------
# Whole-machine verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Result:
    obligation: Obligation
    verdict: Verdict

    def to_json(self) -> dict:
        d = {"kind": self.obligation.kind, "node": self.obligation.node,
             "formula": to_display(self.obligation.formula), "verdict": self.verdict.to_json()}
        if isinstance(self.verdict, Invalid):
            d["witness"] = self.verdict.to_json()["witness"]
        return d


@dataclass(frozen=True)
class Report:
    machine: str
    property: str
    results: tuple[Result, ...]

    @property
    def status(self) -> str:
        verdicts = [r.verdict for r in self.results]
        if all(isinstance(v, Valid) for v in verdicts):
            return "Verified"
        if any(isinstance(v, Invalid) for v in verdicts):
            return "Refuted"
        return "Residual"

    def to_json(self) -> dict:
        return {"machine": self.machine, "property": self.property,
                "obligations": [r.to_json() for r in self.results], "status": self.status}

    def text(self) -> str:
        lines = [f"{self.machine}: {self.property}"]
        for r in self.results:
            ob, v = r.obligation, r.verdict
            if isinstance(v, Valid):
                verdict = f"Valid ({v.procedure})"
            elif isinstance(v, Invalid):
                verdict = f"Invalid, witness {v.text()}"
            else:
                verdict = f"Unknown ({v.reason})"
            lines.append(f"  {ob.kind}({ob.node}): {to_display(ob.formula)}")
            lines.append(f"    {verdict}")
        lines.append(f"status: {self.status}")
        return "\n".join(lines)


def verify(m: StMach, prop: Property = DeadlockFreedom(),
           cm: CompiledMachine | None = None) -> Report:
    cm = cm or machine_sem(m)
    results = tuple(Result(ob, decide(ob)) for ob in gen_obligations(cm, prop))
    return Report(m.name, prop.describe(), results)
