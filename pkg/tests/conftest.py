from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from rcverify.parser import parse_file
from rcverify.semantics import machine_sem

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def model(name: str):
    return parse_file(MODELS / f"{name}.rcsm")


def compiled(name: str):
    return machine_sem(model(name))


@pytest.fixture
def gas():
    return model("gas_analysis")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
