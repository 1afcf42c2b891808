"""Nonlocal evolution form of the equation and its time integration.

The solver advances

    u_t = -(u + Gamma) u_x + d/dx Lambda^{-2} [h(u) - u^2 - u_x^2 / 2] - lambda u,
    h(u) = (alpha + Gamma) u + beta/3 u^3 + gamma/4 u^4,

with every nonlinear product formed on the workspace's padded grid, using
classical RK4 with step-doubling error control. The semi-discrete system is
an exact Fourier-Galerkin truncation on the modes below Nyquist (the initial
field is projected there), so the H0/H1 decay laws hold exactly for it and
only the time integrator perturbs them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BoundaryLeakageError, EquationParams, Field, NonFiniteError, SimConfig
from .spectral import RESOLVED_BAND, SpectralWorkspace, workspace

CFL_EPS = 1e-12
BOUNDARY_TOL = 1e-9
INITIAL_BOUNDARY_TOL = 1e-12


def h_values(u, params: EquationParams):
    """Pointwise h(u) on an array."""
    u2 = u * u
    return u * ((params.alpha + params.cap_gamma) + u2 * (params.beta / 3.0 + params.gamma / 4.0 * u))


def h_prime_values(u, params: EquationParams):
    u2 = u * u
    return (params.alpha + params.cap_gamma) + u2 * (params.beta + params.gamma * u)


def h_fn(u: Field, params: EquationParams, ws: SpectralWorkspace | None = None) -> Field:
    """h(u) on a field; with a workspace it is formed on the padded grid and truncated."""
    if ws is None:
        return u.like(h_values(u.values, params))
    big = ws.padded(ws.forward(u.values))
    return u.like(ws.backward(ws.truncated(h_values(big, params))))


def _rhs_values(u, params: EquationParams, ws: SpectralWorkspace):
    uh = np.fft.fft(u)
    big_u, big_ux = ws.padded(np.stack([uh, ws.ik * uh]))
    adv, src = ws.truncated(np.stack([
        big_u * big_ux,
        h_values(big_u, params) - big_u * big_u - 0.5 * big_ux * big_ux,
    ]))
    out = ws.dx_inv_helmholtz * src - adv
    out -= (params.cap_gamma * ws.ik + params.lam) * uh
    values = np.fft.ifft(out).real
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("right-hand side produced non-finite values")
    return values


def rhs(u: Field, params: EquationParams, ws: SpectralWorkspace) -> Field:
    return u.like(_rhs_values(u.values, params, ws))


def slope_forcing(u, params: EquationParams, ws: SpectralWorkspace):
    """Grid fields (u_x, F, G) entering the slope equation.

    F = Lambda^{-2}(u^2 + u_x^2/2) and G = h(u) - Lambda^{-2} h(u), so that
    along any characteristic d/dt u_x = -u_x^2/2 - lambda u_x + u^2 - F - G.
    """
    uh = np.fft.fft(u)
    big_u, big_ux = ws.padded(np.stack([uh, ws.ik * uh]))
    quad, hh = ws.truncated(np.stack([big_u * big_u + 0.5 * big_ux * big_ux,
                                      h_values(big_u, params)]))
    ux = np.fft.ifft(ws.ik * uh).real
    f_field = np.fft.ifft(ws.inv_helmholtz * quad).real
    g_field = np.fft.ifft(hh * (1.0 - ws.inv_helmholtz)).real
    return ux, f_field, g_field


def rk4_stages(u, dt: float, params: EquationParams, ws: SpectralWorkspace, k1=None):
    """One classical RK4 step; returns the new values and the four stage states."""
    if k1 is None:
        k1 = _rhs_values(u, params, ws)
    y2 = u + 0.5 * dt * k1
    k2 = _rhs_values(y2, params, ws)
    y3 = u + 0.5 * dt * k2
    k3 = _rhs_values(y3, params, ws)
    y4 = u + dt * k3
    k4 = _rhs_values(y4, params, ws)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), (u, y2, y3, y4)


@dataclass(frozen=True)
class SimState:
    t: float
    u: Field
    step_count: int = 0
    dt_current: float = 0.0


def step_rk4(state: SimState, dt: float, params: EquationParams, ws: SpectralWorkspace) -> SimState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    new, _ = rk4_stages(state.u.values, dt, params, ws)
    return SimState(state.t + dt, state.u.like(new), state.step_count + 1, dt)


class Termination(enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    BLOW_UP_DETECTED = "BlowUpDetected"
    BOUNDARY_LEAKAGE = "BoundaryLeakage"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class TerminalStatus:
    kind: Termination
    reason: str | None = None
    t: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def broke(self) -> bool:
        return self.kind is Termination.BLOW_UP_DETECTED

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "reason": self.reason, "t": self.t, **self.detail}


@dataclass
class RunResult:
    config: SimConfig
    u0: Field
    state: SimState
    status: TerminalStatus
    series: list
    slope_trace: list
    flow: object
    flow_trace: object
    snapshots: dict
    accepted_steps: int = 0
    rejected_steps: int = 0
    edge_max: float = 0.0
    edge_exceeded_at: float | None = None
    unresolved_since: float | None = None


def _stop_times(config: SimConfig):
    n = int(math.floor(config.t_end / config.sample_interval + 1e-9))
    stops = [k * config.sample_interval for k in range(1, n + 1)]
    stops += list(config.snapshot_times) + [config.t_end]
    stops = sorted(t for t in stops if 0 < t <= config.t_end)
    merged = []
    for t in stops:
        if not merged or t - merged[-1] > 1e-12 * max(1.0, t):
            merged.append(t)
    return merged


def _is_sample_time(t, config: SimConfig):
    k = round(t / config.sample_interval)
    return abs(k * config.sample_interval - t) <= 1e-12 * max(1.0, t) or t == config.t_end


def run(config: SimConfig, u0: Field, sinks=(), extra_seeds=(), track_flow: bool = True) -> RunResult:
    """Integrate the Cauchy problem from ``u0`` until ``t_end`` or a terminal event.

    Every sample time produces a DiagnosticsRecord (pushed to each callable in
    ``sinks``), a slope-trace sample and a characteristic-flow sample. Blow-up
    is flagged when either the Eulerian minimum slope or the slope carried along
    any characteristic drops below ``slope_floor``; characteristics always
    include the argmin of ``u0'`` plus ``extra_seeds``.

    Edge values above 1e-9 end the run with BoundaryLeakage while the field is
    resolved. Once the spectrum reaches the top of the grid's band, the
    truncation ripple alone exceeds that level at the edges, so exceedances
    are only recorded (``edge_exceeded_at``, ``unresolved_since``).
    """
    from . import breaking, characteristics, diagnostics

    params = config.params
    ws = workspace(config.grid, config.dealias_fraction)
    if u0.grid != config.grid:
        raise ValueError("initial field lives on a different grid than the configuration")
    if u0.edge_max() >= INITIAL_BOUNDARY_TOL:
        raise BoundaryLeakageError(
            f"initial data not negligible near the box edges (max {u0.edge_max():.3e})")

    u = ws.project(u0.values)
    u0_proj = u0.like(u)
    x_star, _ = ws.refined_minimum(u, order=1)
    flow = characteristics.seed_flow(u0_proj, config.seed_stride, extra=(x_star, *extra_seeds)) \
        if track_flow else characteristics.seed_flow(u0_proj, config.grid.n_points, extra=(x_star,))
    flow_trace = characteristics.FlowTrace.start(flow, u0_proj, params, ws)

    series, slope_trace, snapshots = [], [], {}

    def sample(t, values):
        rec = diagnostics.make_record(t, values, ws)
        series.append(rec)
        for sink in sinks:
            sink(rec)
        slope_trace.append(breaking.slope_sample(t, values, params, ws))
        return rec

    sample(0.0, u)
    if 0.0 in config.snapshot_times:
        snapshots[0.0] = u0_proj
    flow_trace.append(flow, u, params, ws)

    stops = _stop_times(config)
    stop_idx = 0
    t = 0.0
    dt = config.dt_init
    accepted = rejected = 0
    edge_seen = 0.0
    edge_at = unresolved_at = None
    status = None
    dx = config.grid.spacing
    slope_floor_angle = math.atan(config.slope_floor)

    while status is None:
        if stop_idx >= len(stops):
            status = TerminalStatus(Termination.REACHED_T_END, t=t)
            break
        target = stops[stop_idx]
        speed = float(np.max(np.abs(u))) + abs(params.cap_gamma) + CFL_EPS
        dt = min(dt, config.cfl * dx / speed, config.sample_interval)
        # blow-up-aware limit: distance of the steepest tracked slope angle from -pi/2
        gap = float(np.min(flow.slope_angle)) + 0.5 * math.pi
        if gap < 0.5:
            dt = min(dt, gap)
        if dt < config.dt_min:
            status = TerminalStatus(Termination.BLOW_UP_DETECTED, "dt_min", t,
                                    {"dt": dt, "tracked_slope_min": flow.slope_min()})
            break
        clipped = t + dt >= target - 1e-12 * max(1.0, target)
        h = target - t if clipped else dt
        try:
            k1 = _rhs_values(u, params, ws)
            full, _ = rk4_stages(u, h, params, ws, k1=k1)
            mid, stages1 = rk4_stages(u, 0.5 * h, params, ws, k1=k1)
            new, stages2 = rk4_stages(mid, 0.5 * h, params, ws)
        except NonFiniteError:
            status = TerminalStatus(Termination.BLOW_UP_DETECTED, "non_finite", t)
            break
        est = float(np.max(np.abs(new - full))) / 15.0
        allowed = config.step_tolerance * h
        if est > allowed:
            rejected += 1
            dt = h * max(0.2, 0.9 * (allowed / est) ** 0.25)
            if dt < config.dt_min:
                status = TerminalStatus(Termination.STEP_UNDERFLOW, "error_control", t, {"dt": dt})
            continue
        new_flow = characteristics.advance_flow(flow, stages1, 0.5 * h, params, ws)
        new_flow = characteristics.advance_flow(new_flow, stages2, 0.5 * h, params, ws)
        accepted += 1
        u, flow = new, new_flow
        t = target if clipped else t + h
        if clipped:
            stop_idx += 1
        growth = 2.0 if est == 0 else min(2.0, max(0.2, 0.9 * (allowed / est) ** 0.25))
        dt = h * growth if not clipped else max(dt, h * growth)

        euler_slope = float(np.min(ws.derivative(u, 1)))
        tracked = flow.slope_min()
        h1_norm = ws.sobolev_norm(u, 1)
        if euler_slope < config.slope_floor or np.min(flow.slope_angle) < slope_floor_angle:
            status = TerminalStatus(Termination.BLOW_UP_DETECTED, "slope_floor", t,
                                    {"eulerian_slope_min": euler_slope,
                                     "tracked_slope_min": tracked})
        elif h1_norm > config.norm_cap:
            status = TerminalStatus(Termination.BLOW_UP_DETECTED, "norm_cap", t,
                                    {"h1_norm": h1_norm})
        if (clipped and _is_sample_time(t, config)) or status is not None:
            sample(t, u)
            flow_trace.append(flow, u, params, ws)
        if clipped or status is not None:
            for ts in config.snapshot_times:
                if abs(ts - t) <= 1e-12 * max(1.0, t):
                    snapshots[ts] = u0.like(u)
            edge = float(np.max(np.abs(u[config.grid.edge_mask()])))
            edge_seen = max(edge_seen, edge)
            resolved = ws.band_amplitude(u) <= RESOLVED_BAND
            if not resolved and unresolved_at is None:
                unresolved_at = t
            if edge > BOUNDARY_TOL:
                if edge_at is None:
                    edge_at = t
                if status is None and resolved:
                    status = TerminalStatus(Termination.BOUNDARY_LEAKAGE, "edge", t,
                                            {"edge_max": edge})

    state = SimState(t, Field(config.grid, u, blowup=not np.all(np.isfinite(u))), accepted, dt)
    return RunResult(config, u0_proj, state, status, series, slope_trace, flow, flow_trace,
                     snapshots, accepted, rejected, edge_seen, edge_at, unresolved_at)
