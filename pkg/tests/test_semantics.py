import pytest
from hypothesis import given, settings

from conftest import GOLDEN, MODELS, compiled
from gen import machines
from reference import machine_traces
from rcverify.expr import App, EmptySeq, EnumLit, IntLit, UnOp, Var, eq
from rcverify.ir import (
    CONTROL_VAR, EPS, AssignS, DoIn, DoIter, DoOut, DoSimple, ExtChoice, FrameR, Guard, SeqR,
    assign, seq, show_program, sub_progs, walk,
)
from rcverify.oracle import DomainSpec, Interp, Machine, failures, initial_states
from rcverify.parser import parse_file
from rcverify.semantics import control_type, display_program, machine_sem


def node(n):
    return EnumLit("GasAnalysis_Node", n)


def r(name):
    return Var(name, "r")


def goto(n):
    return assign(CONTROL_VAR, node(n))


def status(c):
    return EnumLit("Status", c)


def expected_gas_analysis():
    """The GasAnalysis dynamic semantics, transcribed term by term."""
    eps = DoSimple(EPS)
    branches = (
        (eq(Var(CONTROL_VAR), node("InitState")),
         seq(eps, assign("r:gs", EmptySeq()), assign("r:anl", IntLit(0)), goto("NoGas"))),
        (eq(Var(CONTROL_VAR), node("NoGas")),
         seq(DoIn("gas", r("gs")), goto("Analysis"))),
        (eq(Var(CONTROL_VAR), node("Analysis")),
         seq(assign("r:sts", App("analysis", (r("gs"),))),
             ExtChoice((Guard(eq(r("sts"), status("noGas")), seq(eps, DoSimple("resume"), goto("NoGas"))),
                        Guard(eq(r("sts"), status("gasD")), seq(eps, goto("GasDetected"))))))),
        (eq(Var(CONTROL_VAR), node("GasDetected")),
         seq(assign("r:ins", App("intensity", (r("gs"),))),
             ExtChoice((
                 Guard(App("goreq", (r("ins"), Var("thr"))), seq(eps, DoSimple("stop"), goto("FinalState"))),
                 Guard(UnOp("not", App("goreq", (r("ins"), Var("thr")))),
                       seq(eps, assign("r:anl", App("location", (r("gs"),))),
                           DoOut("turn", r("anl")), goto("Reading"))))))),
        (eq(Var(CONTROL_VAR), node("Reading")),
         seq(DoIn("gas", r("gs")), goto("Analysis"))),
    )
    return SeqR(goto("InitState"), DoIter(branches))


def test_gas_analysis_matches_example_term():
    cm = compiled("gas_analysis")
    shown = display_program(cm)
    assert isinstance(shown.second, DoIter) and len(shown.second.branches) == 5
    assert shown == expected_gas_analysis()


def test_gas_analysis_golden_text():
    text = show_program(display_program(compiled("gas_analysis")))
    assert text == (GOLDEN / "gas_analysis.txt").read_text().rstrip("\n")


def _outside_frames(p):
    yield p
    if not isinstance(p, FrameR):
        for c in sub_progs(p):
            yield from _outside_frames(c)


def test_raw_program_frames_every_action():
    cm = compiled("gas_analysis")
    loop = cm.program.second
    for _, body in loop.branches:
        # outside frames only the control variable is assigned
        outside = list(_outside_frames(body))
        assert any(isinstance(q, FrameR) for q in outside)
        for q in outside:
            if isinstance(q, AssignS):
                assert [k for k, _ in q.sigma.entries] == [CONTROL_VAR]
            assert not isinstance(q, (DoIn, DoOut))


def test_control_type_and_finals():
    cm = compiled("gas_analysis")
    assert control_type(cm.machine).constructors == (
        "InitState", "NoGas", "Analysis", "GasDetected", "Reading", "FinalState")
    assert set(cm.per_node) == {"InitState", "NoGas", "Analysis", "GasDetected", "Reading"}
    assert cm.consts == frozenset({"thr"})


def test_true_guard_is_elided_and_eps_inserted():
    cm = compiled("eps_ping")
    for _, body in display_program(cm).second.branches:
        assert not any(isinstance(q, Guard) for q in walk(body))
        assert any(q == DoSimple(EPS) for q in walk(body))


def _program_traces(cm, spec, depth):
    interp = Interp(cm.env, spec)
    mach = Machine(interp)
    out = set()
    for s in initial_states(cm, interp):
        out |= set(failures(cm.program, interp, depth, s, mach))
    return out


SPEC = DomainSpec(int_range=(0, 2))


@pytest.mark.parametrize("path", sorted(MODELS.glob("*.rcsm")), ids=lambda p: p.stem)
def test_corpus_traces_match_direct_interpreter(path):
    m = parse_file(path)
    assert _program_traces(machine_sem(m), SPEC, 6) == machine_traces(m, Interp(m.env, SPEC), 6)


@settings(max_examples=60)
@given(machines)
def test_random_traces_match_direct_interpreter(m):
    assert _program_traces(machine_sem(m), SPEC, 5) == machine_traces(m, Interp(m.env, SPEC), 5)
