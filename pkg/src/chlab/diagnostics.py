"""Time-dependent invariants, differential-identity residuals and norm monitors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import DomainViolation, EquationParams, Field
from .spectral import SpectralWorkspace, workspace


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    h0: float
    h1: float
    m_integral: float
    m_h1_norm: float
    slope_min: float
    slope_argmin: float
    sup_abs_u: float

    CSV_HEADER = ("t", "h0", "h1", "m_integral", "m_h1", "slope_min", "slope_argmin", "sup_u")

    def as_row(self):
        return (self.t, self.h0, self.h1, self.m_integral, self.m_h1_norm, self.slope_min,
                self.slope_argmin, self.sup_abs_u)

    def to_dict(self):
        return asdict(self)


def make_record(t: float, u, ws: SpectralWorkspace) -> DiagnosticsRecord:
    u = np.asarray(u, dtype=float)
    m = ws.helmholtz(u)
    xi, y = ws.refined_minimum(u, order=1)
    return DiagnosticsRecord(
        t=float(t),
        h0=ws.integral(u),
        h1=0.5 * ws.sobolev_norm(u, 1) ** 2,
        m_integral=ws.integral(m),
        m_h1_norm=ws.sobolev_norm(m, 1),
        slope_min=y,
        slope_argmin=xi,
        sup_abs_u=float(np.max(np.abs(u))),
    )


def energy_h0(u: Field) -> float:
    return workspace(u.grid).integral(u.values)


def energy_h1(u: Field, ws: SpectralWorkspace | None = None) -> float:
    ws = ws or workspace(u.grid)
    return 0.5 * ws.sobolev_norm(u.values, 1) ** 2


@dataclass(frozen=True)
class DecayReport:
    h0_deviation: float
    h0_is_absolute: bool
    h1_deviation: float
    momentum_deviation: float
    momentum_vs_h0: float

    def to_dict(self):
        return asdict(self)


def verify_decay(series, lam: float) -> DecayReport:
    """Worst deviation of the samples from the exponential decay laws.

    H0 and H1 are compared as ratios ``H(t) e^{c lam t} / H(0) - 1``. When
    |H0(0)| < 1e-10 (odd data) the H0 figure is the absolute deviation
    ``|H0(t) - e^{-lam t} H0(0)|`` instead. The momentum figure is
    ``|int m - e^{-lam t} int m0| / max(1, |int m0|)`` and ``momentum_vs_h0``
    is ``max |int m - int u| / max(1, |int u|)``.
    """
    if not series:
        raise ValueError("empty diagnostics series")
    first = series[0]
    h0_abs = abs(first.h0) < 1e-10
    h0_dev = h1_dev = mom_dev = mvh = 0.0
    mom_scale = max(1.0, abs(first.m_integral))
    for rec in series:
        decay = math.exp(-lam * rec.t)
        if h0_abs:
            h0_dev = max(h0_dev, abs(rec.h0 - decay * first.h0))
        else:
            h0_dev = max(h0_dev, abs(rec.h0 / (decay * first.h0) - 1.0))
        if first.h1 > 0:
            h1_dev = max(h1_dev, abs(rec.h1 / (decay * decay * first.h1) - 1.0))
        else:
            h1_dev = max(h1_dev, abs(rec.h1))
        mom_dev = max(mom_dev, abs(rec.m_integral - decay * first.m_integral) / mom_scale)
        mvh = max(mvh, abs(rec.m_integral - rec.h0) / max(1.0, abs(rec.h0)))
    return DecayReport(h0_dev, h0_abs, h1_dev, mom_dev, mvh)


# ---------------------------------------------------------------------------
# differential identities

@dataclass(frozen=True)
class ResidualReport:
    equation: float
    divergence_form: float
    energy_form: float
    sqrt_form: float | None

    def to_dict(self):
        return asdict(self)


def _time_derivative(slices, dt):
    a, b, _, d, e = slices
    return (a - 8.0 * b + 8.0 * d - e) / (12.0 * dt)


def identity_residuals(slices, dt: float, params: EquationParams, grid,
                       third: bool | None = None, delta: float = 1e-6) -> ResidualReport:
    """Evaluate E[v] and the three flux-form identities at the middle slice.

    ``slices`` holds v at five equally spaced times t-2dt .. t+2dt; time
    derivatives use the fourth-order centred stencil, space derivatives are
    spectral. Returns max-norm residuals (LHS - RHS) and max |E|. With
    ``third=None`` the square-root identity is evaluated only when the
    coefficients allow it (beta = gamma = 0, Gamma = -alpha) and
    min(v - v_xx) > delta; ``third=True`` raises DomainViolation instead of
    skipping.
    """
    slices = [np.asarray(s, dtype=float) for s in slices]
    if len(slices) != 5:
        raise ValueError("need exactly five time slices")
    ws = workspace(grid, 1.0)
    d = ws.derivative
    lam, al, be, ga, cg = params.lam, params.alpha, params.beta, params.gamma, params.cap_gamma

    v = slices[2]
    vt = _time_derivative(slices, dt)
    vx, vxx, vxxx = d(v, 1), d(v, 2), d(v, 3)
    vtx, vtxx = d(vt, 1), d(vt, 2)
    m = v - vxx
    mt = vt - vtxx

    e = (mt + lam * m - 2.0 * vx * vxx - v * vxxx
         - (al + be * v**2 + ga * v**3 - 3.0 * v) * vx - cg * vxxx)

    flux1 = (1.5 * v**2 - vtx - v * vxx - 0.5 * vx**2 - al * v - be / 3.0 * v**3
             - ga / 4.0 * v**4 - cg * vxx - lam * vx)
    r1 = e - (lam * v + vt + d(flux1, 1))

    flux2 = (v**3 - v**2 * vxx - v * vtx + 0.5 * cg * vx**2 - cg * v * vxx - 0.5 * al * v**2
             - be / 4.0 * v**4 - ga / 5.0 * v**5 - lam * v * vx)
    r2 = v * e - (lam * (v**2 + vx**2) + (v * vt + vx * vtx) + d(flux2, 1))

    special = be == 0.0 and ga == 0.0 and cg == -al
    positive = bool(np.min(m) > delta)
    r3 = None
    if third or (third is None and special and positive):
        if not special:
            raise DomainViolation("square-root identity needs beta = gamma = 0 and Gamma = -alpha")
        if not positive:
            raise DomainViolation(f"square-root identity needs v - v_xx > {delta}")
        root = np.sqrt(m)
        r3 = 0.5 * e / root - (0.5 * lam * root + 0.5 * mt / root + d((v - al) * root, 1))
    return ResidualReport(
        float(np.max(np.abs(e))), float(np.max(np.abs(r1))), float(np.max(np.abs(r2))),
        None if r3 is None else float(np.max(np.abs(r3))))


# ---------------------------------------------------------------------------
# H^3 growth monitor

@dataclass(frozen=True)
class MonitorReport:
    holds: bool
    max_ratio: float
    checked_samples: int
    precondition_lost_at: float | None
    c: float
    c_is_heuristic: bool


def default_monitor_constant(params: EquationParams, u0_h1: float) -> float:
    """Heuristic stand-in for the unquantified growth constant: 3 kappa max(1, ||u0||^3)."""
    return 3.0 * params.kappa() * max(1.0, u0_h1**3)


def gronwall_monitor(series, k: float, c: float, lam: float,
                     c_is_heuristic: bool = True) -> MonitorReport:
    """Check ||m(t)||_{H1} <= exp((5k + c + 2 lam) t / 2) ||m0||_{H1} while u_x > -k.

    The monitor disarms at the first sample with slope_min <= -k and reports
    that time; samples from there on are not checked.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    m0 = series[0].m_h1_norm
    rate = 0.5 * (5.0 * k + c + 2.0 * lam)
    worst = 0.0
    holds = True
    lost = None
    checked = 0
    for rec in series:
        if rec.slope_min <= -k:
            lost = rec.t
            break
        bound = math.exp(rate * rec.t) * m0
        checked += 1
        if bound > 0:
            worst = max(worst, rec.m_h1_norm / bound)
        if rec.m_h1_norm > bound * (1.0 + 1e-12) + 1e-300:
            holds = False
    return MonitorReport(holds, worst, checked, lost, c, c_is_heuristic)


def embedding_margin(u, ws: SpectralWorkspace) -> float:
    """||u||_{H1} - sup|u|, non-negative on the line (and on the box for edge-negligible u)."""
    return ws.sobolev_norm(u, 1) - float(np.max(np.abs(u)))


def manufactured(grid, t, shift: float = 0.0):
    """v = e^{-t} sin x + 0.3 e^{-2t} cos 2x + shift (periodic when L/pi is an integer)."""
    x = grid.x
    return np.exp(-t) * np.sin(x) + 0.3 * np.exp(-2.0 * t) * np.cos(2.0 * x) + shift


def manufactured_residuals(params: EquationParams, grid, t: float = 0.5, dt: float = 1e-3,
                           shift: float = 0.0, third: bool | None = None) -> ResidualReport:
    """identity_residuals on five slices of :func:`manufactured` centred at ``t``."""
    slices = [manufactured(grid, t + j * dt, shift) for j in (-2, -1, 0, 1, 2)]
    return identity_residuals(slices, dt, params, grid, third=third)
