import os

import pytest

from sdblind.detector import paper_default
from sdblind.sweep import default_grid, run_sweep

JOBS = min(8, os.cpu_count() or 1)
SEED = 20240611
_acceptance = {}


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def sweeps(grid):
    """Default-grid sweeps shared across test modules, computed lazily."""
    cache = {}

    def get(disc_level=1.04, r_quench=0.0, seed=SEED):
        key = (disc_level, r_quench, seed)
        if key not in cache:
            cfg = paper_default(disc_level=disc_level, r_quench=r_quench)
            cache[key] = run_sweep(cfg, grid, base_seed=seed, jobs=JOBS)
        return cache[key]

    return get


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda n: int(n.split("_")[2])):
        status = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
