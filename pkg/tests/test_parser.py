import pytest
from hypothesis import given

from conftest import FIXTURES, MODELS
from gen import machines
from rcverify.expr import BinOp, IntLit, TypeCheckError, Var
from rcverify.machine import AssignAct, EventAct, IfAct, Input, Output, SeqAct, pretty_print
from rcverify.parser import ParseError, parse, parse_action, parse_expr, parse_file

ALL_MODELS = sorted(MODELS.glob("*.rcsm"))


@pytest.mark.parametrize("path", ALL_MODELS, ids=lambda p: p.stem)
def test_pretty_print_round_trips(path):
    m = parse_file(path)
    again = parse(pretty_print(m))
    assert again == m
    assert pretty_print(again) == pretty_print(m)


@given(machines)
def test_random_machines_round_trip(m):
    assert parse(pretty_print(m)) == m


def test_gas_analysis_shape(gas):
    assert gas.name == "GasAnalysis"
    assert gas.init == "InitState"
    assert gas.finals == ("FinalState",)
    assert [n.nname for n in gas.nodes] == [
        "InitState", "NoGas", "Analysis", "GasDetected", "Reading", "FinalState"]
    assert len(gas.transs) == 7
    t5 = gas.transs[5]
    assert (t5.src, t5.tgt) == ("GasDetected", "Reading")
    assert t5.act == SeqAct(AssignAct("anl", parse_expr("location(gs)", gas.env)),
                            EventAct(Output("turn", Var("anl"))))
    assert gas.transs[1].trig == Input("gas", "gs")


def test_actions_and_precedence(gas):
    env = parse_file(MODELS / "symbolic.rcsm").env
    a = parse_action("x := 2; y := 3 * x; e!(x + y)", env)
    assert a == SeqAct(AssignAct("x", IntLit(2)),
                       SeqAct(AssignAct("y", BinOp("mul", IntLit(3), Var("x"))),
                              EventAct(Output("e", BinOp("add", Var("x"), Var("y"))))))
    assert parse_expr("1 + 2 * x < y or not x = y and true", env) == parse_expr(
        "((1 + (2 * x)) < y) or ((not (x = y)) and true)", env)
    cond = parse_action("if x > 2 then y := 1 else y := 0 end", env)
    assert isinstance(cond, IfAct)


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse_file(FIXTURES / "bad_syntax.rcsm")
    assert info.value.line == 4


def test_type_errors_rejected():
    with pytest.raises(TypeCheckError):
        parse_file(FIXTURES / "bad_type.rcsm")


@pytest.mark.parametrize("text", [
    "x := true",          # ill-typed assignment
    "thr := 1",           # constants are read-only
    "actv := 1",          # the control variable is reserved
    "gas!gs; gas?q",      # unknown variable
])
def test_bad_actions(gas, text):
    with pytest.raises((TypeCheckError, ParseError)):
        parse_action(text, gas.env)
