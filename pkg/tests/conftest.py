"""Shared fixtures: the expensive pipeline runs happen once per session."""

from __future__ import annotations

import time

import numpy as np
import pytest

from crninherit.corpus import load_system
from crninherit.dynamics import find_orbit
from crninherit.verify import load_task, run_inheritance

R1_RATES = (0.5, 3.0, 2.5, 0.2, 0.6, 2.4, 1.8, 0.4)

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def r1_system():
    return load_system("R1")


@pytest.fixture(scope="session")
def r1_orbit(r1_system):
    """(trajectory, detection, report, seconds) for R1 from (1, 1, 1)."""
    (traj, rough, report), secs = timed(lambda: find_orbit(r1_system, [1.0, 1.0, 1.0], 200.0))
    return traj, rough, report, secs


@pytest.fixture(scope="session")
def r2_orbit():
    """R2 at eps = 0.1 from a state with W - V = 1."""
    sys = load_system("R2", eps=0.1)
    x0 = np.array([1.0, 1.0, 1.0, 0.1, 0.1, 1.1])

    def run():
        return find_orbit(sys, x0, 200.0)

    (traj, rough, report), secs = timed(run)
    return sys, x0, traj, rough, report, secs


@pytest.fixture(scope="session")
def r1_r2_certificate():
    return timed(lambda: run_inheritance(load_task("r1_to_r2.json")))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")
