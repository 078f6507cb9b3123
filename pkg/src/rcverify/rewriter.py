"""Algebraic simplification and symbolic evaluation of reactive programs.

Every rule is a partial function on a single node: it returns the rewritten
node or ``None``.  :func:`rewrite` applies a rule list outermost-leftmost until
nothing fires, recording ``(rule id, position)`` for each step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Collection, Sequence

from .expr import (
    FALSE, TRUE, BoolLit, Expr, Subst, TypeEnv, TypeExpr, Var, conj,
    constant_fold, disj, neg, subst_apply, subst_compose,
)
from .ir import (
    CHAOS, MIRACLE, SKIP, STOP, Alternation, AssignS, Assume, Chaos, CondR,
    DoIn, DoIter, DoOut, DoSimple, ExtChoice, FrameError, FrameR, Guard,
    Miracle, NDChoice, RProg, SeqR, SkipR, StopR, SubstApp, frame_extend,
    gcmd, qualify_expr, qualify_key, sub_progs,
)

DEFAULT_BUDGET = 10_000


class RewriteBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Rule:
    id: str
    apply: Callable[[RProg, frozenset], RProg | None]
    origin: str


@dataclass(frozen=True)
class RewriteResult:
    term: RProg
    trace: tuple[tuple[str, tuple[int, ...]], ...]


def _fold_sub(sigma: Subst, e: Expr) -> Expr:
    return constant_fold(subst_apply(sigma, e))


def _head(p: RProg) -> RProg:
    while isinstance(p, SeqR):
        p = p.first
    return p


def event_prefixed(p: RProg) -> bool:
    """``p`` cannot terminate or change state before its first event."""
    if isinstance(p, (DoSimple, DoOut, DoIn, StopR)):
        return True
    if isinstance(p, SeqR):
        return event_prefixed(p.first)
    if isinstance(p, Guard):
        return event_prefixed(p.body)
    if isinstance(p, ExtChoice):
        return all(event_prefixed(b) for b in p.branches)
    return False


_NOT_PUSHABLE = (DoIn, DoIter, FrameR, SubstApp)


# ---------------------------------------------------------------------------
# Sequential composition
# ---------------------------------------------------------------------------


def _miracle_left(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, Miracle):
        return MIRACLE


def _stop_left(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, StopR):
        return STOP


def _chaos_left(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, Chaos):
        return CHAOS


def _skip_unit(p, _):
    if isinstance(p, SeqR):
        if isinstance(p.first, SkipR):
            return p.second
        if isinstance(p.second, SkipR):
            return p.first


def _seq_assoc(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, SeqR):
        return SeqR(p.first.first, SeqR(p.first.second, p.second))


def _assign_push(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, AssignS):
        if not isinstance(_head(p.second), _NOT_PUSHABLE):
            return SubstApp(p.first.sigma, p.second)


def _extchoice_dist(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, ExtChoice) and p.first.branches:
        if all(event_prefixed(b) for b in p.first.branches):
            return ExtChoice(tuple(SeqR(b, p.second) for b in p.first.branches))


def _guard_seq(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, Guard):
        return Guard(p.first.cond, SeqR(p.first.body, p.second))


# ---------------------------------------------------------------------------
# Pending substitutions
# ---------------------------------------------------------------------------


def _subst(kind):
    def rule(p, _):
        if isinstance(p, SubstApp) and isinstance(p.body, kind):
            return _SUBST_LAWS[kind](p.sigma, p.body)
    return rule


_SUBST_LAWS: dict[type, Callable[[Subst, RProg], RProg]] = {
    SeqR: lambda s, q: SeqR(SubstApp(s, q.first), q.second),
    AssignS: lambda s, q: AssignS(subst_compose(q.sigma, s)),
    SkipR: lambda s, q: AssignS(s),
    DoOut: lambda s, q: SeqR(DoOut(q.chan, _fold_sub(s, q.value)), AssignS(s)),
    DoSimple: lambda s, q: SeqR(q, AssignS(s)),
    DoIn: lambda s, q: SeqR(AssignS(s), q),
    DoIter: lambda s, q: SeqR(AssignS(s), q),
    FrameR: lambda s, q: SeqR(AssignS(s), q),
    SubstApp: lambda s, q: SubstApp(subst_compose(q.sigma, s), q.body),
    Chaos: lambda s, q: q,
    StopR: lambda s, q: q,
    Miracle: lambda s, q: q,
    Guard: lambda s, q: Guard(_fold_sub(s, q.cond), SubstApp(s, q.body)),
    ExtChoice: lambda s, q: ExtChoice(tuple(SubstApp(s, b) for b in q.branches)),
    NDChoice: lambda s, q: NDChoice(tuple(SubstApp(s, b) for b in q.branches)),
    Assume: lambda s, q: SeqR(Assume(_fold_sub(s, q.cond)), AssignS(s)),
    CondR: lambda s, q: CondR(SubstApp(s, q.then), _fold_sub(s, q.cond), SubstApp(s, q.orelse)),
    Alternation: lambda s, q: Alternation(tuple((_fold_sub(s, b), SubstApp(s, x)) for b, x in q.branches)),
}


def _subst_id(p, _):
    if isinstance(p, SubstApp) and not p.sigma:
        return p.body


# ---------------------------------------------------------------------------
# Alternation
# ---------------------------------------------------------------------------


def _alt_empty(p, _):
    if isinstance(p, Alternation) and not p.branches:
        return CHAOS


def _alt_single(p, _):
    if isinstance(p, Alternation) and len(p.branches) == 1:
        (b, body), = p.branches
        return CondR(body, b, CHAOS)


def _alt_assume(p, _):
    if isinstance(p, SeqR) and isinstance(p.first, Assume) and isinstance(p.second, Alternation):
        alt = p.second
        if alt.branches and constant_fold(p.first.cond) == constant_fold(disj(b for b, _ in alt.branches)):
            return NDChoice(tuple(gcmd(b, x) for b, x in alt.branches))


# ---------------------------------------------------------------------------
# Frame extension
# ---------------------------------------------------------------------------


def _frame_seq(p, consts):
    if isinstance(p, FrameR) and isinstance(p.body, SeqR):
        return SeqR(FrameR(p.body.first), FrameR(p.body.second))


def _frame_input(p, consts):
    if isinstance(p, FrameR) and isinstance(p.body, DoIn):
        return DoIn(p.body.chan, Var.from_key(qualify_key(p.body.var.key)))


def _frame_assign(p, consts):
    if isinstance(p, FrameR) and isinstance(p.body, AssignS):
        return AssignS(Subst.of({qualify_key(k): qualify_expr(v, consts) for k, v in p.body.sigma.entries}))


def _frame_hom(p, consts):
    if not isinstance(p, FrameR) or isinstance(p.body, (SeqR, DoIn, AssignS)):
        return None
    q, fr = p.body, FrameR
    qe = lambda e: qualify_expr(e, consts)
    if isinstance(q, (Miracle, Chaos, SkipR, StopR, DoSimple)):
        return q
    if isinstance(q, DoOut):
        return DoOut(q.chan, qe(q.value))
    if isinstance(q, Guard):
        return Guard(qe(q.cond), fr(q.body))
    if isinstance(q, CondR):
        return CondR(fr(q.then), qe(q.cond), fr(q.orelse))
    if isinstance(q, ExtChoice):
        return ExtChoice(tuple(fr(b) for b in q.branches))
    if isinstance(q, NDChoice):
        return NDChoice(tuple(fr(b) for b in q.branches))
    if isinstance(q, Assume):
        return Assume(qe(q.cond))
    if isinstance(q, Alternation):
        return Alternation(tuple((qe(b), fr(x)) for b, x in q.branches))
    if isinstance(q, DoIter):
        return DoIter(tuple((qe(b), fr(x)) for b, x in q.branches))
    if isinstance(q, SubstApp):
        sigma = Subst.of({qualify_key(k): qe(v) for k, v in q.sigma.entries})
        return SubstApp(sigma, fr(q.body))
    if isinstance(q, FrameR):
        raise FrameError("nested frame extension")


# ---------------------------------------------------------------------------
# Conditions, guards and choices
# ---------------------------------------------------------------------------


def _guard_lit(value):
    def rule(p, _):
        if isinstance(p, Guard) and p.cond == BoolLit(value):
            return p.body if value else STOP
    return rule


def _cond_lit(value):
    def rule(p, _):
        if isinstance(p, CondR) and p.cond == BoolLit(value):
            return p.then if value else p.orelse
    return rule


def _assume_lit(value):
    def rule(p, _):
        if isinstance(p, Assume) and p.cond == BoolLit(value):
            return SKIP if value else MIRACLE
    return rule


def _ext_single(p, _):
    if isinstance(p, (ExtChoice, NDChoice)) and len(p.branches) == 1:
        return p.branches[0]


def _ext_empty(p, _):
    if isinstance(p, ExtChoice) and not p.branches:
        return STOP


def _ext_stop_unit(p, _):
    if isinstance(p, ExtChoice) and len(p.branches) > 1:
        rest = tuple(b for b in p.branches if not isinstance(b, StopR))
        if len(rest) != len(p.branches):
            return ExtChoice(rest or (STOP,))


def _fold_exprs(p, _):
    if isinstance(p, (Guard, Assume)):
        c = constant_fold(p.cond)
        if c != p.cond:
            return Guard(c, p.body) if isinstance(p, Guard) else Assume(c)
    elif isinstance(p, CondR):
        c = constant_fold(p.cond)
        if c != p.cond:
            return CondR(p.then, c, p.orelse)
    elif isinstance(p, DoOut):
        v = constant_fold(p.value)
        if v != p.value:
            return DoOut(p.chan, v)
    elif isinstance(p, AssignS):
        s = p.sigma.map_values(constant_fold)
        if s != p.sigma:
            return AssignS(s)


# ---------------------------------------------------------------------------
# Catalogue
# ---------------------------------------------------------------------------

_R = Rule
RULES: tuple[Rule, ...] = (
    _R("MIRACLE_LEFT_ANNIHIL", _miracle_left, "miracle is a left annihilator"),
    _R("STOP_LEFT_ZERO", _stop_left, "plumbing: a deadlocked prefix never terminates"),
    _R("CHAOS_LEFT_ZERO", _chaos_left, "plumbing: chaos is a left zero"),
    _R("SKIP_UNIT", _skip_unit, "plumbing: skip is a unit of sequence"),
    _R("SEQ_ASSOC", _seq_assoc, "plumbing: sequence is associative"),
    _R("ALT_ASSUME", _alt_assume, "assumed alternation degenerates to choice"),
    _R("ASSIGN_PUSH", _assign_push, "assignment becomes a pending substitution"),
    _R("EXTCHOICE_LEFT_DIST", _extchoice_dist, "sequence left-distributes over event choice"),
    _R("GUARD_SEQ_ABSORB", _guard_seq, "plumbing: a guard scopes over its continuation"),
    _R("SUBST_ID", _subst_id, "plumbing: identity substitution"),
    _R("SUBST_SEQ", _subst(SeqR), "substitution enters the first of a sequence"),
    _R("SUBST_ASSIGN_COMPOSE", _subst(AssignS), "substitution composes with an assignment"),
    _R("SUBST_SKIP", _subst(SkipR), "plumbing: substitution on skip is an assignment"),
    _R("SUBST_OUT", _subst(DoOut), "substitution passes through a send"),
    _R("SUBST_EVENT", _subst(DoSimple), "plumbing: substitution passes through a plain event"),
    _R("SUBST_INPUT", _subst(DoIn), "plumbing: substitution materialises before a receive"),
    _R("SUBST_ITER", _subst(DoIter), "plumbing: substitution materialises before a loop"),
    _R("SUBST_FRAME", _subst(FrameR), "plumbing: substitution materialises before a frame"),
    _R("SUBST_SUBST", _subst(SubstApp), "plumbing: nested substitutions compose"),
    _R("SUBST_CONST_CHAOS", _subst(Chaos), "plumbing: substitution leaves chaos alone"),
    _R("SUBST_CONST_STOP", _subst(StopR), "plumbing: substitution leaves stop alone"),
    _R("SUBST_CONST_MIRACLE", _subst(Miracle), "plumbing: substitution leaves miracle alone"),
    _R("SUBST_GUARD", _subst(Guard), "substitution enters a guard"),
    _R("SUBST_EXTCHOICE", _subst(ExtChoice), "substitution distributes over external choice"),
    _R("SUBST_NDCHOICE", _subst(NDChoice), "plumbing: substitution distributes over internal choice"),
    _R("SUBST_ASSUME", _subst(Assume), "substitution applies to an assumption"),
    _R("SUBST_COND", _subst(CondR), "plumbing: substitution enters a conditional"),
    _R("SUBST_ALT", _subst(Alternation), "plumbing: substitution enters an alternation"),
    _R("ALT_EMPTY", _alt_empty, "empty alternation is chaos"),
    _R("ALT_SINGLE", _alt_single, "singleton alternation is a conditional"),
    _R("FRAME_SEQ", _frame_seq, "frame extension distributes over sequence"),
    _R("FRAME_INPUT", _frame_input, "frame extension qualifies a receive"),
    _R("FRAME_ASSIGN", _frame_assign, "frame extension qualifies an assignment"),
    _R("FRAME_HOM", _frame_hom, "plumbing: frame extension is homomorphic"),
    _R("GUARD_TRUE", _guard_lit(True), "plumbing: a true guard vanishes"),
    _R("GUARD_FALSE", _guard_lit(False), "plumbing: a false guard is stop"),
    _R("COND_TRUE", _cond_lit(True), "plumbing: conditional on true"),
    _R("COND_FALSE", _cond_lit(False), "plumbing: conditional on false"),
    _R("ASSUME_TRUE", _assume_lit(True), "plumbing: true assumption is skip"),
    _R("ASSUME_FALSE", _assume_lit(False), "plumbing: false assumption is miracle"),
    _R("CHOICE_SINGLE", _ext_single, "plumbing: singleton choice"),
    _R("EXTCHOICE_EMPTY", _ext_empty, "plumbing: empty external choice is stop"),
    _R("EXTCHOICE_STOP_UNIT", _ext_stop_unit, "plumbing: stop is a unit of external choice"),
    _R("FOLD", _fold_exprs, "plumbing: constant folding of expressions"),
)

RULE_BY_ID = {r.id: r for r in RULES}

DISPLAY_RULES = tuple(RULE_BY_ID[i] for i in (
    "FRAME_SEQ", "FRAME_INPUT", "FRAME_ASSIGN", "FRAME_HOM", "SKIP_UNIT",
    "SEQ_ASSOC", "GUARD_TRUE", "GUARD_SEQ_ABSORB", "CHOICE_SINGLE",
))


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


def with_children(p: RProg, kids: Sequence[RProg]) -> RProg:
    if isinstance(p, Guard):
        return Guard(p.cond, kids[0])
    if isinstance(p, FrameR):
        return FrameR(kids[0])
    if isinstance(p, SubstApp):
        return SubstApp(p.sigma, kids[0])
    if isinstance(p, SeqR):
        return SeqR(kids[0], kids[1])
    if isinstance(p, CondR):
        return CondR(kids[0], p.cond, kids[1])
    if isinstance(p, ExtChoice):
        return ExtChoice(tuple(kids))
    if isinstance(p, NDChoice):
        return NDChoice(tuple(kids))
    if isinstance(p, Alternation):
        return Alternation(tuple((b, k) for (b, _), k in zip(p.branches, kids)))
    if isinstance(p, DoIter):
        return DoIter(tuple((b, k) for (b, _), k in zip(p.branches, kids)))
    return p


def _step(p: RProg, rules: Sequence[Rule], consts: frozenset, pos: tuple[int, ...]):
    for r in rules:
        out = r.apply(p, consts)
        if out is not None:
            return out, r.id, pos
    kids = sub_progs(p)
    for i, k in enumerate(kids):
        hit = _step(k, rules, consts, pos + (i,))
        if hit is not None:
            new = list(kids)
            new[i] = hit[0]
            return (with_children(p, new),) + hit[1:]
    return None


def rewrite(p: RProg, rules: Sequence[Rule] = RULES, consts: Collection[str] = (),
            budget: int = DEFAULT_BUDGET) -> RewriteResult:
    consts = frozenset(consts)
    trace = []
    while True:
        hit = _step(p, rules, consts, ())
        if hit is None:
            return RewriteResult(p, tuple(trace))
        if len(trace) >= budget:
            raise RewriteBudgetExceeded(f"no normal form within {budget} steps")
        p, rid, pos = hit
        trace.append((rid, pos))


def simplify(p: RProg, consts: Collection[str] = ()) -> RProg:
    return rewrite(p, RULES, consts).term


def apply_subst(sigma: Subst, p: RProg, consts: Collection[str] = ()) -> RProg:
    """Push ``σ`` fully into ``p``."""
    return rewrite(SubstApp(sigma, p), RULES, consts).term


def apply_rule(rule_id: str, p: RProg, consts: Collection[str] = ()) -> RProg | None:
    """One application of a single rule at the root, or ``None``."""
    return RULE_BY_ID[rule_id].apply(p, frozenset(consts))


# ---------------------------------------------------------------------------
# Node normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntryPath:
    """One way through the entry action: its condition, update and fresh inputs."""

    cond: Expr
    sigma: Subst
    inputs: tuple[tuple[str, TypeExpr], ...] = ()


@dataclass(frozen=True)
class Alternative:
    guard: Expr
    trigger: RProg
    post: RProg


@dataclass(frozen=True)
class NodeNormalForm:
    paths: tuple[EntryPath, ...]
    alternatives: tuple[Alternative, ...]

    def enabled(self, path: EntryPath) -> Expr:
        """Some transition is enabled after ``path`` (an expression over the pre-state)."""
        return constant_fold(subst_apply(path.sigma, disj(a.guard for a in self.alternatives)))


class NormalizationError(ValueError):
    pass


def _sym(p: RProg, paths: list[tuple[list[Expr], Subst, list]], env: TypeEnv, counter: list[int]):
    if isinstance(p, SkipR) or isinstance(p, (DoSimple, DoOut)):
        return paths
    if isinstance(p, AssignS):
        return [(c, subst_compose(p.sigma, s), ins) for c, s, ins in paths]
    if isinstance(p, DoIn):
        out = []
        vtype = env.var_type(p.var)
        for c, s, ins in paths:
            counter[0] += 1
            fresh = f"{p.var.name}#{counter[0]}"
            s2 = Subst.of({**s.mapping, p.var.key: Var(fresh)})
            out.append((c, s2, ins + [(fresh, vtype)]))
        return out
    if isinstance(p, SeqR):
        return _sym(p.second, _sym(p.first, paths, env, counter), env, counter)
    if isinstance(p, CondR):
        out = []
        for c, s, ins in paths:
            b = constant_fold(subst_apply(s, p.cond))
            out += _sym(p.then, [(c + [b], s, ins)], env, counter)
            out += _sym(p.orelse, [(c + [constant_fold(neg(b))], s, ins)], env, counter)
        return out
    raise NormalizationError(f"entry action outside the straight-line fragment: {type(p).__name__}")


def entry_paths(entry: RProg, env: TypeEnv) -> tuple[EntryPath, ...]:
    raw = _sym(entry, [([], Subst(), [])], env, [0])
    out = []
    for c, s, ins in raw:
        cond = constant_fold(conj(*c)) if c else TRUE
        if cond != FALSE:
            out.append(EntryPath(cond, s, tuple(ins)))
    return tuple(out)


def normalize_node(body: RProg, env: TypeEnv) -> NodeNormalForm:
    """Split a compiled node body into entry paths and guarded alternatives."""
    if not (isinstance(body, SeqR) and isinstance(body.first, FrameR) and isinstance(body.second, ExtChoice)):
        raise NormalizationError("not a compiled node body")
    consts = frozenset(env.consts)
    entry = frame_extend(body.first.body, consts)
    alts = []
    for alt in body.second.branches:
        if not (isinstance(alt, SeqR) and isinstance(alt.first, FrameR)):
            raise NormalizationError("not a compiled transition")
        inner, guard = alt.first.body, TRUE
        if isinstance(inner, Guard):
            guard, inner = qualify_expr(inner.cond, consts), inner.body
        if isinstance(inner, SeqR):
            trig, rest = inner.first, inner.second
        else:
            trig, rest = inner, SKIP
        alts.append(Alternative(guard, frame_extend(trig, consts),
                                SeqR(frame_extend(rest, consts), alt.second)))
    return NodeNormalForm(entry_paths(entry, env), tuple(alts))
