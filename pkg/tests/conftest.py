import math

import numpy as np
import pytest


def direct_cvm(x, c):
    """W_n(c) straight from the definition: H_n puts mass 1/n on each point."""
    x = np.asarray(x, dtype=float)
    n = x.size
    d = n - c
    head, tail = np.sort(x[:c]), np.sort(x[c:])
    F = np.searchsorted(head, x, side="right") / c
    G = np.searchsorted(tail, x, side="right") / d
    return c * d / n * math.fsum((F - G) ** 2) / n


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
