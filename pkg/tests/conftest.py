import math

import numpy as np
import pytest

from curveflow.cli import generate_initial
from curveflow.geometry import ClosedCurve, OpenChain


def regular_polygon(n, radius=1.0, phase=0.0):
    a = phase + 2 * math.pi * np.arange(1, n + 1) / n
    return ClosedCurve(radius * np.column_stack([np.cos(a), np.sin(a)]))


def semicircle(n):
    return generate_initial("semicircle", n)


def jittered(rng, n, span, spread=0.7):
    """n sorted angles in [0, span), one per equal cell, randomly placed."""
    u = rng.uniform(0.5 - spread / 2, 0.5 + spread / 2, n)
    return span * (np.arange(n) + u) / n


def random_star(rng, n):
    """Star-shaped CCW polygon with irregular spacing, always simple."""
    a = jittered(rng, n, 2 * math.pi)
    r = rng.uniform(0.6, 1.4, n)
    return ClosedCurve(np.column_stack([r * np.cos(a), r * np.sin(a)]))


def random_convex(rng, n):
    a = jittered(rng, n, 2 * math.pi, spread=0.98)
    rx, ry = rng.uniform(0.3, 3.0, 2)
    c = rng.normal(size=2)
    return ClosedCurve(np.column_stack([c[0] + rx * np.cos(a), c[1] + ry * np.sin(a)]))


def random_chain(rng, n):
    """Droplet-like chain: right endpoint first, interior above the substrate."""
    a = 0.05 + jittered(rng, n - 2, math.pi - 0.1)
    r = rng.uniform(0.7, 1.3, n - 2)
    inner = np.column_stack([r * np.cos(a), r * np.sin(a)])
    ends = rng.uniform(0.7, 1.3, 2)
    x = np.vstack([[ends[0], 0.0], inner, [-ends[1], 0.0]])
    return OpenChain(x)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square():
    return ClosedCurve([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line; returns ``ok`` for asserting."""
    def record(number, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"
        request.config.stash[_VERDICTS].append(line)
        print(line)
        return ok
    return record
