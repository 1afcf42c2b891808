import math

import pytest

from chlab import breaking
from chlab.core import EquationParams, Grid, SimConfig
from chlab.dynamics import run
from chlab.initdata import ProfileSpec, realize

# criterion number -> (ok, detail); filled by test_acceptance.py
ACCEPTANCE = {}

GENERIC = dict(alpha=0.3, beta=0.2, gamma=0.1, cap_gamma=0.1)
BREAKING = dict(alpha=0.02, beta=0.03, gamma=0.04, cap_gamma=0.01)
SPLIT = dict(alpha=0.2, beta=0.0, gamma=0.0, cap_gamma=-0.2)


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


class Run:
    """A finished run with the inputs it came from."""

    def __init__(self, config, u0, result):
        self.config = config
        self.u0 = u0
        self.result = result


def _do(params, spec, **kw):
    grid = Grid()
    cfg = SimConfig(params, grid, **kw)
    u0 = realize(spec, grid)
    return Run(cfg, u0, run(cfg, u0))


@pytest.fixture(scope="session")
def gaussian_run():
    return _do(EquationParams(lam=0.1, **GENERIC), ProfileSpec("gaussian", 0.5, 1.0), t_end=5.0)


@pytest.fixture(scope="session")
def gaussian_run_conservative():
    return _do(EquationParams(lam=0.0, **GENERIC), ProfileSpec("gaussian", 0.5, 1.0), t_end=5.0)


@pytest.fixture(scope="session")
def breaking_fixture():
    """Smallest GaussianDerivative amplitude with a 10% certificate margin, lam = lambda0/2."""
    params = EquationParams(**BREAKING)
    grid = Grid()
    amp = breaking.tune_amplitude(
        lambda a: realize(ProfileSpec("gaussian_derivative", -a, 1.0), grid), params, margin=0.1)
    spec = ProfileSpec("gaussian_derivative", -amp, 1.0)
    u0 = realize(spec, grid)
    params = params.with_(lam=0.5 * breaking.certificate(u0, params).lambda0)
    return params, spec, breaking.certificate(u0, params)


@pytest.fixture(scope="session")
def breaking_run(breaking_fixture):
    params, spec, _ = breaking_fixture
    return _do(params, spec, t_end=50.0)


@pytest.fixture(scope="session")
def split_run():
    return _do(EquationParams(lam=0.1, **SPLIT), ProfileSpec("momentum_split", 0.5, 1.0),
               t_end=10.0, dealias_fraction=0.5)


@pytest.fixture(scope="session")
def split_run_conservative():
    return _do(EquationParams(lam=0.0, **SPLIT), ProfileSpec("momentum_split", 0.5, 1.0),
               t_end=5.0, dealias_fraction=0.5)


def finite(x):
    return x is not None and math.isfinite(x)
