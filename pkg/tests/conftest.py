import sys
import time

import numpy as np
import pytest

from wavebreak import DispersionSymbol, PeriodicGrid
from wavebreak.kernel import build_kernel_table
from wavebreak.solver import SolveConfig, run, suggest_dt


@pytest.fixture(scope="session")
def kernel_table():
    t0 = time.perf_counter()
    table = build_kernel_table(1e-4, 10.0, 200)
    return table, time.perf_counter() - t0


def _timed_run(u0, cfg):
    t0 = time.perf_counter()
    res = run(u0, cfg)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def burgers_run():
    """alpha = 1, u0 = -sin x on 4096 points, run to the default breaking trigger."""
    grid = PeriodicGrid(4096)
    u0 = grid.field(lambda x: -np.sin(x))
    cfg = SolveConfig(DispersionSymbol.fractional(1.0), dt_initial=suggest_dt(u0), t_max=2.0)
    return _timed_run(u0, cfg)


@pytest.fixture(scope="session")
def whitham_run():
    """Whitham, u0 = -2 sin x on 8192 points, run to the default breaking trigger."""
    grid = PeriodicGrid(8192)
    u0 = grid.field(lambda x: -2.0 * np.sin(x))
    cfg = SolveConfig(DispersionSymbol.whitham(), dt_initial=suggest_dt(u0), t_max=2.0)
    return _timed_run(u0, cfg)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
