import itertools

import pytest
from hypothesis import given

from conftest import compiled, model
from gen import CONSTS, machines, programs
from reference import run_action
from rcverify.expr import FALSE, TRUE, BinOp, IntLit, Subst, Var
from rcverify.ir import (
    CHAOS, MIRACLE, SKIP, STOP, AssignS, Assume, DoIn, DoOut, DoSimple, ExtChoice, FrameR,
    Guard, SeqR, SubstApp, assign, seq,
)
from rcverify.oracle import DomainSpec, Interp
from rcverify.parser import parse_action
from rcverify.rewriter import (
    RULE_BY_ID, RULES, NormalizationError, Rule, RewriteBudgetExceeded, apply_rule,
    apply_subst, normalize_node, rewrite, simplify,
)
from rcverify.semantics import action_prog, machine_sem
from rcverify.wellformed import views


def test_symbolic_evaluation_example():
    env = model("symbolic").env
    p = action_prog(parse_action("x := 2; y := 3 * x; e!(x + y)", env))
    assert simplify(p) == SeqR(DoOut("e", IntLit(8)),
                               AssignS(Subst.of({"x": IntLit(2), "y": IntLit(6)})))


def test_trace_records_rule_ids():
    p = seq(assign("x", IntLit(2)), DoOut("c", Var("x")))
    res = rewrite(p)
    assert res.term == SeqR(DoOut("c", IntLit(2)), assign("x", IntLit(2)))
    assert [r for r, _ in res.trace][0] == "ASSIGN_PUSH"
    assert all(r in RULE_BY_ID for r, _ in res.trace)


@pytest.mark.parametrize("rule,before,after", [
    ("MIRACLE_LEFT_ANNIHIL", SeqR(MIRACLE, DoSimple("a")), MIRACLE),
    ("STOP_LEFT_ZERO", SeqR(STOP, DoSimple("a")), STOP),
    ("CHAOS_LEFT_ZERO", SeqR(CHAOS, DoSimple("a")), CHAOS),
    ("SKIP_UNIT", SeqR(SKIP, DoSimple("a")), DoSimple("a")),
    ("GUARD_TRUE", Guard(TRUE, DoSimple("a")), DoSimple("a")),
    ("GUARD_FALSE", Guard(FALSE, DoSimple("a")), STOP),
    ("ASSUME_FALSE", Assume(FALSE), MIRACLE),
    ("SUBST_CONST_CHAOS", SubstApp(Subst.of({"x": IntLit(1)}), CHAOS), CHAOS),
    ("FRAME_INPUT", FrameR(DoIn("c", Var("x"))), DoIn("c", Var("x", "r"))),
])
def test_individual_rules(rule, before, after):
    assert apply_rule(rule, before) == after


def test_substitution_respects_constants():
    p = SubstApp(Subst.of({"x": IntLit(1)}), DoOut("c", BinOp("add", Var("x"), Var("k"))))
    assert apply_subst(Subst.of({"x": IntLit(1)}), DoOut("c", Var("k")), CONSTS) == \
        SeqR(DoOut("c", Var("k")), assign("x", IntLit(1)))
    assert simplify(p, CONSTS) == SeqR(DoOut("c", BinOp("add", Var("k"), IntLit(1))),
                                       assign("x", IntLit(1)))


def test_substitution_stops_at_inputs():
    p = SubstApp(Subst.of({"x": IntLit(1)}), seq(DoIn("c", Var("x")), DoOut("c", Var("x"))))
    out = simplify(p)
    assert out == seq(assign("x", IntLit(1)), DoIn("c", Var("x")), DoOut("c", Var("x")))


def test_budget():
    loop = Rule("LOOP", lambda p, c: ExtChoice((p,)) if isinstance(p, DoSimple) else
                (p.branches[0] if isinstance(p, ExtChoice) else None), "test")
    with pytest.raises(RewriteBudgetExceeded):
        rewrite(DoSimple("a"), [loop], budget=50)


@given(programs)
def test_simplify_is_idempotent(prog):
    p, _ = prog
    once = simplify(p, CONSTS)
    assert simplify(once, CONSTS) == once


def test_rule_catalogue_is_unique():
    ids = [r.id for r in RULES]
    assert len(ids) == len(set(ids))
    assert all(r.origin for r in RULES)


def test_gas_analysis_normal_forms():
    cm = compiled("gas_analysis")
    nf = normalize_node(cm.per_node["Analysis"], cm.env)
    assert len(nf.paths) == 1 and len(nf.alternatives) == 2
    assert str(nf.enabled(nf.paths[0])) == "analysis(r:gs) = noGas ∨ analysis(r:gs) = gasD"
    nf = normalize_node(cm.per_node["NoGas"], cm.env)
    assert nf.paths[0].inputs == () and len(nf.alternatives) == 1
    with pytest.raises(NormalizationError):
        normalize_node(DoSimple("a"), cm.env)


@given(machines)
def test_entry_paths_agree_with_execution(m):
    """Each concrete run of an entry action is described by exactly one path."""
    cm = machine_sem(m)
    it = Interp(m.env, DomainSpec(int_range=(0, 1)))
    keys = sorted(m.env.vars)
    for node in views(m).inters:
        nf = normalize_node(cm.per_node[node.nname], cm.env)
        for combo in itertools.product(*(it.carrier(m.env.vars[k]) for k in keys)):
            s = dict(zip(keys, combo))
            rs = {f"r:{k}": v for k, v in s.items()}
            runs = run_action(it, node.nentry, s)
            symbolic = []
            for path in nf.paths:
                names = [n for n, _ in path.inputs]
                for vals in itertools.product(*(it.carrier(t) for _, t in path.inputs)):
                    env = {**rs, **dict(zip(names, vals))}
                    if it.eval(path.cond, env):
                        after = {**rs, **{k: it.eval(v, env) for k, v in path.sigma.entries}}
                        symbolic.append({k[2:]: v for k, v in after.items()})
            assert sorted(map(repr, symbolic)) == sorted(repr({**s, **t}) for _, t in runs)
