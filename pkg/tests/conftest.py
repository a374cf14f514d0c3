import os

# More numba workers than cores is fine; it lets the determinism tests compare
# genuinely different thread counts on small machines.
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np
import pytest

from tripod_crt.forward import simulate_cone_data
from tripod_crt.phantom import default_phantom
from tripod_crt.sigproc import PhiGrid, SGrid, YGrid


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("filterwarnings", "ignore:.*TBB.*")
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """``report(name, ok, detail)`` prints one PASS/FAIL line and keeps it for the summary."""
    def emit(name: str, ok: bool, detail: str) -> bool:
        line = f"{name} {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        request.config.stash[ACCEPTANCE].append(line)
        return ok

    return emit


@pytest.fixture(scope="session")
def phantom():
    return default_phantom()


@pytest.fixture(scope="session")
def full_data(phantom):
    """Default-grid cone data for the default phantom, keyed by ``k``."""
    cache = {}

    def get(k: int):
        if k not in cache:
            cache[k] = simulate_cone_data(phantom, (YGrid(), PhiGrid(), SGrid()), k)
        return cache[k]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
