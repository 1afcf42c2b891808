import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chlab import diagnostics
from chlab.core import BoundaryLeakageError, EquationParams, Field, Grid, SimConfig
from chlab.dynamics import (SimState, Termination, h_fn, h_values, rhs, run, slope_forcing,
                            step_rk4)
from chlab.spectral import workspace

GENERIC = EquationParams(lam=0.1, alpha=0.3, beta=0.2, gamma=0.1, cap_gamma=0.1)


def gaussian_field(grid, a=0.5, w=1.0, c=0.0):
    ws = workspace(grid)
    return Field(grid, ws.project(a * np.exp(-(((grid.x - c) / w) ** 2))))


def integrate_fixed(u, dt, t_end, params, ws):
    state = SimState(0.0, u)
    for _ in range(int(round(t_end / dt))):
        state = step_rk4(state, dt, params, ws)
    return state.u.values


def test_rk4_self_convergence_order():
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    u = gaussian_field(grid)
    sols = [integrate_fixed(u, dt, 1.0, GENERIC, ws) for dt in (0.1, 0.05, 0.025)]
    e1 = np.max(np.abs(sols[0] - sols[1]))
    e2 = np.max(np.abs(sols[1] - sols[2]))
    order = math.log2(e1 / e2)
    assert 3.5 <= order <= 4.3


def test_zero_field_is_fixed_point():
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    assert np.all(rhs(Field.zeros(grid), GENERIC, ws).values == 0.0)


def test_rhs_solves_the_third_order_form():
    # u_t from the nonlocal form must make the equation residual vanish
    grid = Grid()
    ws = workspace(grid)
    u = gaussian_field(grid)
    dt = 1e-3
    state = SimState(0.0, u)
    slices = [u.values]
    for _ in range(4):
        state = step_rk4(state, dt, GENERIC, ws)
        slices.append(state.u.values)
    rep = diagnostics.identity_residuals(slices, dt, GENERIC, grid)
    assert rep.equation < 1e-9


def test_h_matches_polynomial():
    grid = Grid()
    u = gaussian_field(grid)
    v = u.values
    p = GENERIC
    want = (p.alpha + p.cap_gamma) * v + p.beta / 3 * v**3 + p.gamma / 4 * v**4
    assert np.max(np.abs(h_fn(u, p).values - want)) < 1e-15
    assert np.max(np.abs(h_fn(u, p, workspace(grid)).values - want)) < 1e-12
    assert np.allclose(h_values(v, p), want, rtol=0, atol=1e-15)


def test_slope_forcing_pieces():
    grid = Grid()
    ws = workspace(grid)
    v = gaussian_field(grid).values
    ux, f, g = slope_forcing(v, GENERIC, ws)
    ux_s = ws.derivative(v, 1)
    assert np.max(np.abs(ux - ux_s)) < 1e-13
    assert np.max(np.abs(f - ws.helmholtz_inverse(v * v + 0.5 * ux_s**2))) < 1e-12
    h = h_values(v, GENERIC)
    assert np.max(np.abs(g - (h - ws.helmholtz_inverse(h)))) < 1e-12


def test_short_run_decay_laws_and_dt_refinement():
    grid = Grid(10 * math.pi, 256)
    u0 = gaussian_field(grid, 0.3, 1.0)
    devs = []
    for tol in (1e-8, 1e-10):
        cfg = SimConfig(GENERIC, grid, t_end=1.0, step_tolerance=tol)
        res = run(cfg, u0)
        assert res.status.kind is Termination.REACHED_T_END
        devs.append(diagnostics.verify_decay(res.series, GENERIC.lam).h1_deviation)
    assert devs[1] < 1e-9
    assert devs[1] <= devs[0]


def test_decay_deviation_at_round_off_on_both_resolutions():
    for n in (256, 512):  # same box, dx halved
        grid = Grid(10 * math.pi, n)
        res = run(SimConfig(GENERIC, grid, t_end=0.5), gaussian_field(grid, 0.3))
        d = diagnostics.verify_decay(res.series, GENERIC.lam)
        assert d.h1_deviation < 1e-9
        assert d.h0_deviation < 1e-12


def test_zero_data_reaches_t_end():
    grid = Grid(10 * math.pi, 256)
    res = run(SimConfig(GENERIC, grid, t_end=0.3), Field.zeros(grid))
    assert res.status.kind is Termination.REACHED_T_END
    assert all(r.h1 == 0 and r.sup_abs_u == 0 for r in res.series)


def test_samples_on_the_interval_grid():
    grid = Grid(10 * math.pi, 256)
    res = run(SimConfig(GENERIC, grid, t_end=0.2, sample_interval=0.05, snapshot_times=(0.1,)),
              gaussian_field(grid, 0.1))
    assert [round(r.t, 12) for r in res.series] == [0.0, 0.05, 0.1, 0.15, 0.2]
    assert list(res.snapshots) == [0.1]


def test_initial_data_touching_the_edge_is_rejected():
    grid = Grid(10 * math.pi, 256)
    u0 = Field(grid, np.exp(-((grid.x - grid.half_length * 0.97) ** 2)))
    with pytest.raises(BoundaryLeakageError):
        run(SimConfig(GENERIC, grid), u0)


def test_mass_transported_into_the_edge_band_ends_the_run():
    # a smooth bump carried right at speed ~ Gamma reaches the outer 5% band
    grid = Grid(10 * math.pi, 256)
    params = EquationParams(cap_gamma=5.0, alpha=-5.0)
    u0 = gaussian_field(grid, 1e-3, 1.0, c=20.0)
    res = run(SimConfig(params, grid, t_end=5.0), u0)
    assert res.status.kind is Termination.BOUNDARY_LEAKAGE
    assert res.status.t < 5.0
    assert res.edge_exceeded_at is not None


def test_norm_cap_triggers():
    grid = Grid(10 * math.pi, 256)
    res = run(SimConfig(GENERIC, grid, t_end=1.0, norm_cap=1e-3), gaussian_field(grid, 0.5))
    assert res.status.kind is Termination.BLOW_UP_DETECTED
    assert res.status.reason == "norm_cap"


def test_step_rejects_non_positive_dt():
    grid = Grid(10 * math.pi, 64)
    with pytest.raises(ValueError):
        step_rk4(SimState(0.0, Field.zeros(grid)), 0.0, GENERIC, workspace(grid))


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0.05, 0.4), lam=st.floats(0.0, 0.5))
def test_h1_decay_along_random_short_runs(a, lam):
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    params = GENERIC.with_(lam=lam)
    u = gaussian_field(grid, a, 1.5)
    end = integrate_fixed(u, 0.01, 0.2, params, ws)
    ratio = ws.sobolev_norm(end, 1) ** 2 / ws.sobolev_norm(u.values, 1) ** 2
    assert ratio == pytest.approx(math.exp(-2 * lam * 0.2), rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0.05, 0.4), lam=st.floats(0.0, 0.5))
def test_momentum_equals_mass_and_decays(a, lam):
    grid = Grid(10 * math.pi, 256)
    ws = workspace(grid)
    params = GENERIC.with_(lam=lam)
    u = gaussian_field(grid, a, 1.5)
    end = integrate_fixed(u, 0.01, 0.2, params, ws)
    assert ws.integral(ws.helmholtz(end)) == pytest.approx(ws.integral(end), abs=1e-12)
    assert ws.integral(end) == pytest.approx(math.exp(-lam * 0.2) * ws.integral(u.values),
                                             abs=1e-11)
