import numpy as np
import pytest

from entropic_bb.bridge import build_path
from entropic_bb.grid import Field, Grid
from entropic_bb.oracle import EXAMPLES
from entropic_bb.schrodinger import sinkhorn_solve

CERT_TOL = 1e-12


class Solved:
    """Converged factors, marginals and path for one oracle example."""

    def __init__(self, name, lo, hi, npts, M):
        self.cf = EXAMPLES[name]()
        self.grid = Grid.uniform(lo, hi, npts)
        self.rho0 = Field.from_function(self.grid, self.cf.rho0, "density")
        self.rho1 = Field.from_function(self.grid, self.cf.rho1, "density")
        self.pp, self.report = sinkhorn_solve(self.rho0, self.rho1, 1.0, CERT_TOL)
        self.path = build_path(self.pp, M)


_cache = {}


def solved(name, lo=-14.0, hi=16.0, npts=1024, M=64):
    key = (name, lo, hi, npts, M)
    if key not in _cache:
        _cache[key] = Solved(name, lo, hi, npts, M)
    return _cache[key]


@pytest.fixture(scope="session")
def gauss():
    return solved("gaussian_example")


@pytest.fixture(scope="session")
def mixture():
    return solved("mixture_example")


@pytest.fixture(scope="session")
def gauss_wide():
    return solved("gaussian_example", -20.0, 20.0)


@pytest.fixture(scope="session")
def mixture_wide():
    return solved("mixture_example", -20.0, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
