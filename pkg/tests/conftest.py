import math

import numpy as np
import pytest

from quadcomp.forms import FiniteSemimetric

PI = math.pi


def square_metric():
    s = math.sqrt(2.0)
    return FiniteSemimetric([[0, 1, s, 1], [1, 0, 1, s], [s, 1, 0, 1], [1, s, 1, 0]])


def circle_metric(r=1.0):
    """Four equally spaced points on a circle of radius ``r``, cyclic order."""
    q, h = r * PI / 2, r * PI
    return FiniteSemimetric([[0, q, h, q], [q, 0, q, h], [h, q, 0, q], [q, h, q, 0]])


def tripod_metric(legs=(1.0, 1.0, 1.0)):
    """Three leg ends and the hub (point index 3)."""
    a, b, c = legs
    return FiniteSemimetric([[0, a + b, a + c, a], [a + b, 0, b + c, b],
                             [a + c, b + c, 0, c], [a, b, c, 0]])


def product(m, heights):
    """l2 product of ``m`` with points of a line at the given heights."""
    h = np.asarray(heights, dtype=float)
    return FiniteSemimetric(np.sqrt(m.d ** 2 + (h[:, None] - h[None, :]) ** 2))


@pytest.fixture
def square():
    return square_metric()


@pytest.fixture
def circle():
    return circle_metric()


@pytest.fixture
def tripod():
    return tripod_metric()


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
