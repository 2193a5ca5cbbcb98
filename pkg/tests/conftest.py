import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from charspot.geometry import RotatedBox  # noqa: E402


def random_box(rng, span=100.0, size=(2.0, 40.0)):
    return RotatedBox(
        rng.uniform(0, span),
        rng.uniform(0, span),
        rng.uniform(*size),
        rng.uniform(*size),
        rng.uniform(-math.pi / 2, math.pi / 2),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda ln: int(ln.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)
