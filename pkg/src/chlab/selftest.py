"""Fast built-in property checks, runnable without the test dependencies."""

from __future__ import annotations

import math

import numpy as np

from . import breaking, diagnostics
from .config import dumps, loads
from .core import EquationParams, Field, Grid
from .dynamics import SimState, step_rk4
from .initdata import ProfileSpec, oracle_h1_norm, realize
from .spectral import workspace


def _parseval(rng):
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    f = ws.project(np.exp(-grid.x**2) * (1 + 0.3 * rng.standard_normal()))
    direct = math.sqrt(np.sum(f**2) * grid.spacing)
    return abs(ws.sobolev_norm(f, 0) - direct) / direct


def _green(rng):
    grid = Grid(n_points=1024)
    ws = workspace(grid)
    c = rng.uniform(-1, 1)
    probes = rng.uniform(-5, 5, 16)
    # Green convolution of exp(-(x - c)^2) in closed form
    ref = [0.25 * math.sqrt(math.pi) * math.exp(0.25)
           * (math.exp(-s) * math.erfc(0.5 - s) + math.exp(s) * math.erfc(0.5 + s))
           for s in probes - c]
    g = ws.helmholtz_inverse(np.exp(-((grid.x - c) ** 2)))
    return float(np.max(np.abs(ws.interpolate(g, probes) - np.array(ref))))


def _h1_oracle(rng):
    spec = ProfileSpec("gaussian", amplitude=rng.uniform(0.1, 2), width=rng.uniform(0.5, 3))
    grid = Grid()
    u = realize(spec, grid)
    return abs(workspace(grid).sobolev_norm(u.values, 1) / oracle_h1_norm(spec) - 1)


def _decay(rng):
    params = EquationParams(lam=0.1, alpha=0.3, beta=0.2, gamma=0.1, cap_gamma=0.1)
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    u = Field(grid, ws.project(0.3 * np.exp(-grid.x**2)))
    h1 = 0.5 * ws.sobolev_norm(u.values, 1) ** 2
    state = SimState(0.0, u)
    for _ in range(50):
        state = step_rk4(state, 0.01, params, ws)
    h1t = 0.5 * ws.sobolev_norm(state.u.values, 1) ** 2
    return abs(h1t * math.exp(2 * params.lam * state.t) / h1 - 1)


def _identities(rng):
    params = EquationParams(*rng.uniform(-0.5, 0.5, 5))
    rep = diagnostics.manufactured_residuals(params, Grid())
    special = EquationParams(lam=0.1, alpha=0.3, cap_gamma=-0.3)
    third = diagnostics.manufactured_residuals(special, Grid(), shift=3.0, third=True)
    return max(rep.divergence_form, rep.energy_form, third.sqrt_form)


def _certificate(rng):
    params = EquationParams(alpha=0.02, beta=0.03, gamma=0.04, cap_gamma=0.01)
    grid = Grid()
    worst = 0.0
    for _ in range(5):
        spec = ProfileSpec("gaussian_derivative", amplitude=-rng.uniform(0.8, 1.2))
        cert = breaking.certificate(realize(spec, grid), params)
        if not cert.condition_holds:
            continue
        lam = cert.lambda0 / 2
        if not (0 < cert.epsilon0 < 1 and cert.positivity(lam) > 0):
            return math.inf
        a = cert.epsilon0 / (4 * lam)
        t = cert.breaking_time_bound(lam)
        worst = max(worst, abs(math.exp(lam * t) * (a + 1 / cert.y0) - a) / a)
    return worst


def _config_roundtrip(rng):
    cfg = loads("[params]\nlambda = %r\n[profile]\nkind = gaussian\namplitude = %r\n"
                % (rng.uniform(0, 1), rng.uniform(0, 1)))
    back = loads(dumps(cfg))
    return 0.0 if (back.sim, back.profile) == (cfg.sim, cfg.profile) else 1.0


def _csv_roundtrip(rng):
    x = rng.standard_normal(1000) * 10.0 ** rng.integers(-300, 300, 1000)
    return float(np.max(np.abs(np.array([float("%.17g" % v) for v in x]) - x)))


CHECKS = (
    ("parseval", _parseval, 1e-12),
    ("helmholtz_inverse_vs_green_closed_form", _green, 1e-8),
    ("gaussian_h1_norm_oracle", _h1_oracle, 1e-8),
    ("h1_decay_law", _decay, 1e-8),
    ("identity_residuals", _identities, 1e-8),
    ("certificate_algebra", _certificate, 1e-12),
    ("config_roundtrip", _config_roundtrip, 0.0),
    ("csv_17_digit_roundtrip", _csv_roundtrip, 0.0),
)


def run_checks(seed: int = 0, quiet: bool = False) -> bool:
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn, tol in CHECKS:
        try:
            value = fn(rng)
            ok = value <= tol
        except Exception as exc:  # a crash is a failed check
            value, ok = f"{type(exc).__name__}: {exc}", False
        ok_all &= ok
        if not quiet:
            shown = value if isinstance(value, str) else f"{value:.3e}"
            print(f"{'PASS' if ok else 'FAIL'}  {name}  {shown} (tol {tol:g})")
    return ok_all

