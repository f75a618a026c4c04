import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dnomp import mpnum

sys.path.insert(0, os.path.dirname(__file__))

# multiprecision kernels are slow; keep example counts modest and deadlines off
settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def ctx53():
    with mpnum.PrecisionCtx(53) as c:
        yield c


@pytest.fixture
def ctx113():
    with mpnum.PrecisionCtx(113) as c:
        yield c


@pytest.fixture
def ctx212():
    with mpnum.PrecisionCtx(212) as c:
        yield c


def rms(x):
    return float(mpnum.rms(np.asarray(x, dtype=object)))


def maxabs(x):
    return float(mpnum.max_abs(np.asarray(x, dtype=object)))


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    def record(num, ok, detail):
        line = f"ACCEPTANCE #{num:<3} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
