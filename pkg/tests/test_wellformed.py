import dataclasses

import pytest
from hypothesis import given

from conftest import FIXTURES, MODELS
from gen import machines
from rcverify.parser import parse_file
from rcverify.semantics import machine_sem
from rcverify.verifier import DeadlockFreedom, gen_obligations
from rcverify.wellformed import IllFormedMachine, check_wf, views

CORRUPTED = {
    1: "wf1_duplicate_node.rcsm",
    2: "wf2_missing_initial.rcsm",
    3: "wf3_final_initial.rcsm",
    4: "wf4_bad_source.rcsm",
    5: "wf5_bad_target.rcsm",
}


@pytest.mark.parametrize("constraint", sorted(CORRUPTED))
def test_each_constraint_has_a_fixture(constraint):
    m = parse_file(FIXTURES / CORRUPTED[constraint])
    report = check_wf(m)
    assert not report.ok
    assert report.constraints() == {constraint}
    with pytest.raises(IllFormedMachine):
        views(m)
    with pytest.raises(IllFormedMachine):
        machine_sem(m)


@pytest.mark.parametrize("path", sorted(MODELS.glob("*.rcsm")), ids=lambda p: p.stem)
def test_corpus_is_well_formed(path):
    assert check_wf(parse_file(path)).ok


@given(machines)
def test_views_are_consistent(m):
    assert check_wf(m).ok
    vs = views(m)
    for name in vs.nnames:
        assert vs.nmap[name].nname == name
    for node in m.nodes:
        assert vs.nmap[node.nname] == node
    assert vs.ninit.nname == m.init
    assert vs.ninit in m.nodes
    assert vs.ninit.nname not in vs.fnames
    assert {n.nname for n in vs.inters} == vs.nnames - vs.fnames
    for name, ts in vs.tmap.items():
        assert all(t.src == name for t in ts)
    assert sum(len(ts) for ts in vs.tmap.values()) == len(m.transs)


@given(machines)
def test_obligation_count(m):
    cm = machine_sem(m)
    obs = gen_obligations(cm, DeadlockFreedom())
    assert len(obs) == 1 + len(views(m).inters)
    assert [o.kind for o in obs].count("InitEstablishes") == 1


def test_warnings_do_not_block(gas):
    m = dataclasses.replace(gas, finals=gas.finals + ("Nowhere",))
    report = check_wf(m)
    assert report.ok
    assert any("Nowhere" in w for w in report.warnings)
