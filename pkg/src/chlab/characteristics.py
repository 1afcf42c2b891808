"""Lagrangian flow q_t = u(t, q) + Gamma, its stretch q_x, and the slope along it.

Each seed carries three ODEs advanced in lockstep with the field solver,
using the solver's own RK4 stage states:

    q'      = u(q) + Gamma
    log_qx' = u_x(q)                      (so q_x = exp(log_qx) > 0 always)
    phi'    = -sin^2(phi)/2 - lambda sin(phi) cos(phi) + R(q) cos^2(phi)

where phi = arctan(u_x(t, q)) and R = u^2 - F - G is the nonlocal forcing of
the slope equation. The angle form stays smooth while the slope itself runs
off to -infinity (phi -> -pi/2), which is what makes the tracker usable as a
breaking detector beyond the grid's resolving power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DomainViolation, EquationParams, Field, InterpolationBreakdown
from .dynamics import h_prime_values, slope_forcing
from .spectral import SpectralWorkspace, workspace

SIGN_DEADBAND = 1e-10
WRAP_TOL = 1e-6


@dataclass(frozen=True)
class CharacteristicFlow:
    seeds: np.ndarray
    q: np.ndarray
    log_qx: np.ndarray
    slope_angle: np.ndarray
    t: float = 0.0

    @property
    def q_x(self):
        return np.exp(self.log_qx)

    @property
    def slopes(self):
        """u_x carried along each characteristic; -inf once the angle passed -pi/2."""
        return np.where(self.slope_angle > -0.5 * math.pi, np.tan(self.slope_angle), -np.inf)

    def slope_min(self) -> float:
        return float(np.min(self.slopes))

    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.q) > 0))


def seed_flow(u0: Field, stride: int = 8, extra=()) -> CharacteristicFlow:
    """Seeds at every ``stride``-th grid node plus the points in ``extra``.

    Nodes in the outer edge band are skipped: the data vanish there and a
    seed that starts next to the seam would wrap within a few time units.
    """
    grid = u0.grid
    inner = ~grid.edge_mask()
    pts = set(grid.x[::stride][inner[::stride]].tolist())
    for x in extra:
        x = float(x)
        if not -grid.half_length <= x < grid.half_length:
            raise ValueError(f"extra seed {x} lies outside the box")
        if all(abs(x - p) > 1e-12 for p in pts):
            pts.add(x)
    seeds = np.array(sorted(pts))
    ws = workspace(grid)
    slope0 = ws.interpolate(u0.values, seeds, order=1)
    return CharacteristicFlow(seeds, seeds.copy(), np.zeros_like(seeds), np.arctan(slope0))


def _check_wrap(values, q, ws: SpectralWorkspace):
    grid = ws.grid
    wrapped = np.mod(q + grid.half_length, grid.length) - grid.half_length
    near = grid.half_length - np.abs(wrapped) <= 0.05 * grid.length
    if np.any(near):
        edge = float(np.max(np.abs(values[grid.edge_mask()])))
        if edge > WRAP_TOL:
            raise InterpolationBreakdown(
                f"characteristic near the periodic seam while |u| = {edge:.2e} there")


def _flow_rates(values, q, phi, params: EquationParams, ws: SpectralWorkspace):
    _check_wrap(values, q, ws)
    ux, f_field, g_field = slope_forcing(values, params, ws)
    forcing = values * values - f_field - g_field
    uq, uxq, rq = ws.interpolate(np.stack([values, ux, forcing]), q)
    s, c = np.sin(phi), np.cos(phi)
    dphi = -0.5 * s * s - params.lam * s * c + rq * c * c
    return uq + params.cap_gamma, uxq, dphi


def advance_flow(flow: CharacteristicFlow, stages, dt: float, params: EquationParams,
                 ws: SpectralWorkspace) -> CharacteristicFlow:
    """RK4 update of every seed using the field's four RK4 stage states.

    ``stages`` are the solver states at t, t+dt/2, t+dt/2, t+dt (as returned by
    :func:`chlab.dynamics.rk4_stages`), so the flow sees exactly the field the
    solver integrates.
    """
    y1, y2, y3, y4 = stages
    q, lq, phi = flow.q, flow.log_qx, flow.slope_angle
    a1, b1, c1 = _flow_rates(y1, q, phi, params, ws)
    a2, b2, c2 = _flow_rates(y2, q + 0.5 * dt * a1, phi + 0.5 * dt * c1, params, ws)
    a3, b3, c3 = _flow_rates(y3, q + 0.5 * dt * a2, phi + 0.5 * dt * c2, params, ws)
    a4, b4, c4 = _flow_rates(y4, q + dt * a3, phi + dt * c3, params, ws)
    w = dt / 6.0
    return replace(
        flow,
        q=q + w * (a1 + 2 * a2 + 2 * a3 + a4),
        log_qx=lq + w * (b1 + 2 * b2 + 2 * b3 + b4),
        slope_angle=phi + w * (c1 + 2 * c2 + 2 * c3 + c4),
        t=flow.t + dt,
    )


@dataclass
class FlowTrace:
    """Per-sample history of every characteristic."""

    seeds: np.ndarray
    m0_grid: np.ndarray
    m0_seeds: np.ndarray
    times: list = field(default_factory=list)
    q: list = field(default_factory=list)
    log_qx: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    m_q: list = field(default_factory=list)
    dh_q: list = field(default_factory=list)

    @classmethod
    def start(cls, flow: CharacteristicFlow, u0: Field, params, ws: SpectralWorkspace):
        m0 = ws.helmholtz(u0.values)
        return cls(flow.seeds.copy(), m0, ws.interpolate(m0, flow.seeds))

    def append(self, flow: CharacteristicFlow, values, params, ws: SpectralWorkspace):
        m = ws.helmholtz(values)
        ux = ws.derivative(values, 1)
        dh = h_prime_values(values, params) * ux
        m_q, dh_q = ws.interpolate(np.stack([m, dh]), flow.q)
        self.times.append(flow.t)
        self.q.append(flow.q.copy())
        self.log_qx.append(flow.log_qx.copy())
        self.slopes.append(flow.slopes)
        self.m_q.append(m_q)
        self.dh_q.append(dh_q)

    def arrays(self):
        return (np.array(self.times), np.array(self.q), np.array(self.log_qx),
                np.array(self.m_q), np.array(self.dh_q))


@dataclass(frozen=True)
class TransportReport:
    max_relative_residual: float
    per_seed: np.ndarray
    integral_term_sup: float
    scale: float


def transport_identity_residual(trace: FlowTrace, params: EquationParams) -> TransportReport:
    """Compare m(t,q) q_x^2 with m0 e^{-lambda t} + int_0^t e^{lambda(s-t)} q_x^2 (h(u))_x ds.

    The time integral uses the trapezoid rule over the stored samples.
    Residuals are divided by max |m0| over the seeds. ``integral_term_sup`` is
    the largest |int_0^t e^{lambda s} q_x^2 (h(u))_x ds| seen, i.e. the term a
    dominating function for sign preservation would have to bound.
    """
    t, _, lq, m_q, dh_q = trace.arrays()
    qx2 = np.exp(2.0 * lq)
    integrand = np.exp(params.lam * t)[:, None] * qx2 * dh_q
    cumulative = np.zeros_like(integrand)
    if len(t) > 1:
        steps = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t)[:, None]
        cumulative[1:] = np.cumsum(steps, axis=0)
    decay = np.exp(-params.lam * t)[:, None]
    lhs = m_q * qx2
    rhs = decay * (trace.m0_seeds[None, :] + cumulative)
    scale = float(np.max(np.abs(trace.m0_seeds))) or 1.0
    err = np.abs(lhs - rhs) / scale
    per_seed = err.max(axis=0) if len(t) else np.zeros(len(trace.seeds))
    return TransportReport(float(per_seed.max(initial=0.0)), per_seed,
                           float(np.max(np.abs(cumulative), initial=0.0)), scale)


def _sign(values, deadband):
    return np.where(np.abs(values) <= deadband, 0, np.sign(values)).astype(int)


def single_sign_change(m0, deadband: float = SIGN_DEADBAND) -> bool:
    """True when m0 <= 0 to the left of some point and >= 0 to its right."""
    s = _sign(np.asarray(m0), deadband)
    nz = s[s != 0]
    return bool(np.all(np.diff(nz) >= 0))


@dataclass(frozen=True)
class SignReport:
    preserved: bool
    violations: int
    hypothesis_met: bool
    slope_bound_holds: bool | None
    min_slope_margin: float | None


def sign_preservation_check(trace: FlowTrace, params: EquationParams, u0_h1: float | None = None,
                            series=None, deadband: float = SIGN_DEADBAND) -> SignReport:
    """Check sgn m(t, q_i) = sgn m0(x_i) along every seed when h vanishes.

    With ``series`` and ``u0_h1`` also checks the lower slope bound
    u_x >= -||u0||_{H1} (tolerance 1e-6), but only when m0 has a single
    sign change from negative to positive; otherwise ``hypothesis_met`` is
    False and the bound is not evaluated.
    """
    if not params.h_vanishes:
        raise DomainViolation("sign preservation needs h = 0 (alpha = -Gamma, beta = gamma = 0)")
    s0 = _sign(trace.m0_seeds, deadband)
    violations = 0
    for m_q in trace.m_q:
        violations += int(np.sum(s0 * _sign(m_q, deadband) < 0))
    hypothesis = single_sign_change(trace.m0_grid, deadband)
    bound = margin = None
    if hypothesis and series is not None and u0_h1 is not None:
        margin = min(rec.slope_min for rec in series) + u0_h1
        bound = margin >= -1e-6
    return SignReport(violations == 0, violations, hypothesis, bound, margin)


def flow_structure(trace: FlowTrace) -> tuple[bool, bool]:
    """(q_x > 0 everywhere, seed order preserved) over all samples."""
    positive = all(np.all(np.isfinite(lq)) and np.all(np.exp(lq) > 0) for lq in trace.log_qx)
    ordered = all(np.all(np.diff(q) > 0) for q in trace.q)
    return positive, ordered
