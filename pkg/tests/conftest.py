import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixtures import TWO_KERNEL_CSV, gpt2_csv  # noqa: E402

from clockplan.measurements import parse_table  # noqa: E402


@pytest.fixture
def two_kernel():
    return parse_table(TWO_KERNEL_CSV)


@pytest.fixture(scope="session")
def gpt2():
    return parse_table(gpt2_csv())


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(number, description, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {description}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
