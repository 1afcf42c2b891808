import math

import numpy as np
import pytest

from chlab import characteristics as ch
from chlab.core import DomainViolation, EquationParams, Field, Grid, InterpolationBreakdown, SimConfig
from chlab.dynamics import run
from chlab.initdata import ProfileSpec, realize
from chlab.spectral import workspace

GRID = Grid(10 * math.pi, 512)
SPLIT = EquationParams(lam=0.1, alpha=0.2, cap_gamma=-0.2)


@pytest.fixture(scope="module")
def short_split():
    u0 = realize(ProfileSpec("momentum_split", 0.5, 1.0), GRID)
    return run(SimConfig(SPLIT, GRID, t_end=1.0, dealias_fraction=0.5), u0)


def test_seeds_skip_edge_band_and_include_extras():
    u0 = realize(ProfileSpec("gaussian", 0.5), GRID)
    flow = ch.seed_flow(u0, stride=16, extra=(0.123,))
    assert 0.123 in flow.seeds
    assert np.all(np.abs(flow.seeds) < 0.9 * GRID.half_length + GRID.spacing)
    assert np.all(np.diff(flow.seeds) > 0)
    assert np.allclose(np.tan(flow.slope_angle), workspace(GRID).interpolate(
        u0.values, flow.seeds, order=1))
    with pytest.raises(ValueError):
        ch.seed_flow(u0, extra=(GRID.half_length + 1,))


def test_zero_field_flow_is_pure_translation():
    params = EquationParams(cap_gamma=0.7)
    ws = workspace(GRID)
    z = np.zeros(GRID.n_points)
    flow = ch.seed_flow(Field.zeros(GRID), stride=64)
    out = ch.advance_flow(flow, (z, z, z, z), 0.5, params, ws)
    assert np.allclose(out.q, flow.q + 0.35, atol=1e-15)
    assert np.all(out.log_qx == 0) and np.all(out.slope_angle == 0)


def test_wrap_guard():
    ws = workspace(GRID)
    values = np.ones(GRID.n_points)
    with pytest.raises(InterpolationBreakdown):
        ch._check_wrap(values, np.array([GRID.half_length - 0.1]), ws)


def test_flow_structure_and_transport_on_short_run(short_split):
    pos, ordered = ch.flow_structure(short_split.flow_trace)
    assert pos and ordered
    rep = ch.transport_identity_residual(short_split.flow_trace, SPLIT)
    assert rep.max_relative_residual < 1e-6
    # h vanishes, so the integral term does too
    assert rep.integral_term_sup < 1e-12


def test_sign_preservation(short_split):
    rep = ch.sign_preservation_check(short_split.flow_trace, SPLIT, 1.0, short_split.series)
    assert rep.preserved and rep.violations == 0 and rep.hypothesis_met
    assert rep.slope_bound_holds


def test_sign_preservation_requires_vanishing_h(short_split):
    with pytest.raises(DomainViolation):
        ch.sign_preservation_check(short_split.flow_trace, SPLIT.with_(beta=0.1))


def test_single_sign_change():
    assert ch.single_sign_change(np.array([-1.0, -0.5, 0.0, 0.3, 1.0]))
    assert ch.single_sign_change(np.array([-1.0, 1e-12, -1e-12, 1.0]))
    assert not ch.single_sign_change(np.array([1.0, -1.0]))
    assert not ch.single_sign_change(np.array([-1.0, 1.0, -1.0]))


def test_transport_with_nonzero_h_uses_integral_term():
    params = EquationParams(lam=0.05, alpha=0.3, beta=0.2, gamma=0.1, cap_gamma=0.1)
    u0 = realize(ProfileSpec("gaussian", 0.3, 1.0), GRID)
    res = run(SimConfig(params, GRID, t_end=0.5, sample_interval=0.01), u0)
    rep = ch.transport_identity_residual(res.flow_trace, params)
    assert rep.integral_term_sup > 1e-3
    # trapezoid rule over 0.01 samples
    assert rep.max_relative_residual < 1e-4
