import time

from laws import SEEDS, check_laws, full_report
from rcverify.ir import CHAOS, MIRACLE, STOP, DoIn, ExtChoice, SeqR, AssignS
from rcverify.rewriter import RULES, Rule


def test_every_law_instance_preserves_failures():
    start = time.perf_counter()
    report = full_report()
    elapsed = time.perf_counter() - start
    assert len(SEEDS) >= 500 and report.programs >= 500
    assert report.failures == []
    assert set(report.instances) == {r.id for r in RULES}, "some law was never exercised"
    assert elapsed < 300


def _bogus(name, fn):
    return Rule(name, fn, "deliberately unsound")


BOGUS = [
    # sequencing with miracle on the right does not annihilate
    _bogus("RIGHT_MIRACLE", lambda p, c: MIRACLE if isinstance(p, SeqR) and p.second == MIRACLE else None),
    # stop is a unit of external choice, not a zero
    _bogus("STOP_ZERO", lambda p, c: STOP if isinstance(p, ExtChoice) and STOP in p.branches else None),
    # an assignment does not commute with a receive
    _bogus("SWAP_INPUT", lambda p, c: SeqR(p.second, p.first)
           if isinstance(p, SeqR) and isinstance(p.first, AssignS) and isinstance(p.second, DoIn) else None),
    # chaos is not a right zero
    _bogus("RIGHT_CHAOS", lambda p, c: CHAOS if isinstance(p, SeqR) and p.second == CHAOS else None),
]


def test_checker_rejects_unsound_laws():
    for rule in BOGUS:
        report = check_laws(range(200), rules=(rule,), depth=6)
        assert report.instances[rule.id] > 0, rule.id
        assert report.failures, f"{rule.id} was not refuted"
