from __future__ import annotations

import os

# Pin BLAS to one thread before numpy spins up its pools; training must be
# bit-reproducible and the acceptance runtimes are quoted for a single core.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from threadpoolctl import threadpool_limits  # noqa: E402

from gnsindy.snapshot import PdeSpec, spectral_solve  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def _one_thread():
    with threadpool_limits(limits=1):
        yield


@pytest.fixture(scope="session")
def burgers_snapshot():
    return spectral_solve(PdeSpec.burgers())


@pytest.fixture(scope="session")
def allen_cahn_snapshot():
    return spectral_solve(PdeSpec.allen_cahn())


@pytest.fixture(scope="session")
def kdv_snapshot():
    return spectral_solve(PdeSpec.kdv())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
