import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES, compiled, model
from gen import MACHINE_ENV, _action, _cond, machines
from reference import run_action
from rcverify.expr import App, EnumLit, Var, evaluate, free_vars
from rcverify.oracle import DomainSpec, Interp, find_deadlock
from rcverify.parser import parse_expr, parse_file
from rcverify.semantics import machine_sem
from rcverify.verifier import (
    DeadlockFreedom, Invalid, PropertyError, StateInvariant, Unknown, Valid, _Fresh,
    check_witness, decide, gen_obligations, verify, wp,
)

EXPECTED = {
    "gas_analysis": "Verified",
    "gas_analysis_3status": "Refuted",
    "counter": "Refuted",
    "counter_wrap": "Verified",
    "traffic_light": "Verified",
    "vending": "Verified",
    "display": "Verified",
    "eps_ping": "Verified",
    "dead_end": "Refuted",
    "mode_gap": "Refuted",
    "bool_toggle": "Verified",
    "cond_entry": "Refuted",
    "thermostat": "Verified",
    "symbolic": "Verified",
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_verdicts(name):
    assert verify(model(name)).status == EXPECTED[name]


def test_gas_analysis_procedures():
    report = verify(model("gas_analysis"))
    by_node = {(r.obligation.kind, r.obligation.node): r.verdict for r in report.results}
    assert len(by_node) == 6
    assert by_node[("NodePreserves", "Analysis")] == Valid("enum-enumeration")
    assert by_node[("NodePreserves", "GasDetected")] == Valid("boolean-abstraction")
    assert str(report.results[3].obligation.formula) == \
        "∀gs • analysis(gs) = noGas ∨ analysis(gs) = gasD"


def test_third_constructor_witness():
    report = verify(model("gas_analysis_3status"))
    bad = [r for r in report.results if isinstance(r.verdict, Invalid)]
    assert [r.obligation.node for r in bad] == ["Analysis"]
    (atom, value), = bad[0].verdict.witness
    assert atom == App("analysis", (Var("gs"),)) and value == EnumLit("Status", "unknownGas")
    assert check_witness(bad[0].obligation, bad[0].verdict)


def test_counter_witness_and_invariants():
    report = verify(model("counter"))
    bad = [r for r in report.results if isinstance(r.verdict, Invalid)]
    assert bad[0].verdict.witness == ((Var("x"), 5),)
    m = model("counter")
    assert verify(m, StateInvariant(parse_expr("x <= 5", m.env))).status == "Verified"
    inv = verify(m, StateInvariant(parse_expr("x < 5", m.env)))
    assert inv.status == "Refuted"
    assert [r.verdict for r in inv.results][-1].witness == ((Var("x"), 4),)
    assert verify(m, StateInvariant(parse_expr("x <= 5", m.env))).results[-1].verdict == \
        Valid("order-enumeration")


def test_invariant_may_not_mention_control():
    m = model("counter")
    with pytest.raises(PropertyError):
        gen_obligations(machine_sem(m), StateInvariant(Var("actv")))


def test_residual_obligations_carry_smt():
    report = verify(parse_file(FIXTURES / "residual.rcsm"))
    assert report.status == "Residual"
    for r in report.results:
        assert isinstance(r.verdict, Unknown)
        assert "(check-sat)" in r.verdict.smt


def test_symbolic_consts_are_quantified():
    cm = compiled("gas_analysis")
    ob = gen_obligations(cm, DeadlockFreedom())[4]
    assert [n for n, _ in ob.bound] == ["gs", "thr"]
    cm = compiled("thermostat")
    for ob in gen_obligations(cm, DeadlockFreedom()):
        assert "setpoint" not in free_vars(ob.body)


# -- wp against execution ----------------------------------------------------

SMALL = DomainSpec(int_range=(0, 2))


@settings(max_examples=150)
@given(st.integers(0, 2**32))
def test_wp_agrees_with_execution(seed):
    rng = random.Random(seed)
    a = _action(rng, 3)
    q = _cond(rng)
    it = Interp(MACHINE_ENV, SMALL)
    fresh = _Fresh()
    pre = wp(a, q, MACHINE_ENV, fresh)
    names = sorted(MACHINE_ENV.vars)
    extra = sorted(fresh.types)
    for combo in itertools.product(*(it.carrier(MACHINE_ENV.vars[n]) for n in names)):
        s = dict(zip(names, combo))
        runs = run_action(it, a, s)
        # only input values drawn from the carrier are reachable here, so the
        # fresh names range over the carrier as well
        direct = all(it.eval(q, t) for _, t in runs)
        symbolic = all(
            it.eval(pre, {**s, **dict(zip(extra, vals))})
            for vals in itertools.product(*(it.carrier(fresh.types[n]) for n in extra)))
        assert direct == symbolic


# -- decision procedure against brute force ---------------------------------


@settings(max_examples=150)
@given(machines)
def test_decide_against_brute_force(m):
    cm = machine_sem(m)
    for ob in gen_obligations(cm, DeadlockFreedom()):
        v = decide(ob)
        names = [n for n, _ in ob.bound]
        types = dict(ob.bound)
        carriers = [list(range(-3, 6)) if str(types[n]) == "int" else Interp(ob.env, SMALL).carrier(types[n])
                    for n in names]
        falsified = [c for c in itertools.product(*carriers)
                     if evaluate(ob.body, dict(zip(names, c))) is False]
        if isinstance(v, Valid):
            assert not falsified
        elif isinstance(v, Invalid):
            assert check_witness(ob, v)
            assert evaluate(ob.body, {a.name: val for a, val in v.witness}) is False


@settings(max_examples=80)
@given(machines)
def test_verified_random_machines_do_not_deadlock(m):
    cm = machine_sem(m)
    if verify(m, cm=cm).status == "Verified":
        res = find_deadlock(cm, SMALL, 8)
        assert res.deadlock is None

