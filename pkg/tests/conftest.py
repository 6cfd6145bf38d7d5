from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from radioslam.signal import SignalSpec

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "radioslam" / "scenarios"


@pytest.fixture
def spec31():
    return SignalSpec(6e9, 300e6, 10e6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One PASS/FAIL line per acceptance criterion, printed after the test run.
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def add(criterion: str, passed: bool, detail: str) -> bool:
        line = f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
