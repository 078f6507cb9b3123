import random

from hypothesis import given, strategies as st

from conftest import compiled
from gen import ProgramGen, inits, interp, programs
from rcverify.expr import TRUE, BinOp, IntLit, TypeEnv, Var, INT
from rcverify.ir import (
    CHAOS, MIRACLE, SKIP, STOP, Assume, DoIn, DoIter, DoOut, DoSimple, ExtChoice, NDChoice,
    SeqR, assign, seq,
)
from rcverify.oracle import (
    DomainSpec, Interp, TreeBuilder, equiv, failures, find_deadlock, mk_state, replay,
)

A, B = ("a", None), ("b", None)
ENV = TypeEnv(vars={"x": INT}, events={"a": None, "b": None, "c": INT})
IT = Interp(ENV, DomainSpec(int_range=(0, 1)))


def obs(p, depth=3, init=mk_state({"x": 0})):
    return failures(p, IT, depth, init)


def test_basic_processes():
    assert obs(STOP)[()].acceptances == frozenset({frozenset()})
    assert obs(MIRACLE) == {(): obs(MIRACLE)[()]} and not obs(MIRACLE)[()].acceptances
    assert obs(CHAOS)[()].chaos
    assert obs(SKIP)[()].terminations == {mk_state({"x": 0})}
    assert obs(assign("x", IntLit(1)))[()].terminations == {mk_state({"x": 1})}


def test_external_versus_internal_choice():
    ext = obs(ExtChoice((DoSimple("a"), DoSimple("b"))))
    assert ext[()].acceptances == {frozenset({A, B})}
    internal = obs(NDChoice((DoSimple("a"), DoSimple("b"))))
    assert internal[()].acceptances == {frozenset({A}), frozenset({B})}
    assert set(ext) == set(internal) == {(), (A,), (B,)}


def test_miracle_is_a_left_annihilator_and_a_choice_unit():
    assert equiv(SeqR(MIRACLE, DoSimple("a")), MIRACLE, IT, 3, [mk_state({"x": 0})])
    assert equiv(NDChoice((MIRACLE, DoSimple("a"))), DoSimple("a"), IT, 3, [mk_state({"x": 0})])


def test_input_and_output():
    o = obs(seq(DoIn("c", Var("x")), DoOut("c", BinOp("add", Var("x"), IntLit(1)))))
    assert set(o) == {(), (("c", 0),), (("c", 1),), (("c", 0), ("c", 1)), (("c", 1), ("c", 2))}
    assert o[()].acceptances == {frozenset({("c", 0), ("c", 1)})}


def test_assumption_and_iteration():
    init = mk_state({"x": 0})
    assert obs(Assume(BinOp("eq", Var("x"), IntLit(1))), 2, init)[()].terminations == frozenset()
    loop = DoIter(((BinOp("lt", Var("x"), IntLit(2)), seq(DoSimple("a"), assign("x", BinOp("add", Var("x"), IntLit(1))))),))
    o = obs(loop, 4, init)
    assert (A, A) in o and (A, A, A) not in o
    assert o[(A, A)].terminations == {mk_state({"x": 2})}


def test_silent_divergence_is_chaos():
    spin = DoIter(((TRUE, SeqR(DoSimple("a"), SKIP)),))
    assert not obs(spin)[()].chaos
    from rcverify.ir import DoIter as Loop
    silent = Loop(((TRUE, assign("x", Var("x"))),))  # built without the productivity check
    assert obs(silent)[()].chaos


def test_depth_cut():
    o = failures(DoIter(((TRUE, DoSimple("a")),)), IT, 2, mk_state({"x": 0}))
    assert o[(A, A)].cut and not o[(A,)].cut


@given(programs)
def test_interned_trees_agree_with_failure_tables(prog):
    p, outer = prog
    it = interp()
    builder = TreeBuilder(it)
    for s in inits(outer)[:2]:
        table = failures(p, it, 5, s)
        tree = builder.tree(p, s, 5)
        flat = {}
        todo = [((), tree)]
        while todo:
            t, node = todo.pop()
            flat[t] = node.obs
            todo.extend((t + (e,), k) for e, k in node.kids.items())
        assert flat == table


@given(st.integers(0, 2**32))
def test_equivalence_is_reflexive_and_distinguishes_stop(seed):
    p = ProgramGen(random.Random(seed)).prog(4)
    it = interp()
    assert equiv(p, p, it, 5, inits(False))
    # prefixing with an event that is then refused forever is always visible
    assert not equiv(SeqR(DoSimple("a"), p), SeqR(DoSimple("a"), STOP), it, 5, inits(False)) \
        or equiv(p, STOP, it, 4, inits(False))


def test_sampled_tables_are_deterministic():
    cm = compiled("gas_analysis_3status")
    a = Interp(cm.env, DomainSpec(seed=3))
    b = Interp(cm.env, DomainSpec(seed=3))
    gs = a.carrier(cm.env.funs["analysis"][0][0])
    assert [a.call("analysis", (g,)) for g in gs] == [b.call("analysis", (g,)) for g in gs]


def test_deadlock_search_and_replay():
    cm = compiled("counter")
    res = find_deadlock(cm, DomainSpec(), 10)
    assert res.deadlock is not None and res.deadlock.node == "Loop"
    assert [e[0] for e in res.deadlock.trace] == ["ε"] + ["tick"] * 5
    assert replay(cm, DomainSpec(), res.deadlock.trace)
    assert not replay(cm, DomainSpec(), res.deadlock.trace[:-1])
    ok = find_deadlock(compiled("counter_wrap"), DomainSpec(), 10)
    # the configuration graph closes up, so the search is exhaustive
    assert ok.deadlock is None and not ok.cut and not ok.chaos


def test_final_state_is_not_a_deadlock():
    res = find_deadlock(compiled("symbolic"), DomainSpec(), 10)
    assert res.deadlock is None and not res.cut
