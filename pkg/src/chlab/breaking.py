"""Breaking certificate for initial data and slope-minimum tracking during runs."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import EquationParams, Field
from .dynamics import Termination, h_values, slope_forcing
from .spectral import SpectralWorkspace, workspace

NORM_POWER_NOTE = ("||u0||^(1/2) in the steepness condition is read as the square root of "
                   "the H1 norm")
JUMP_CELLS = 5
# top-band amplitude up to which min u_x is accurate to ~1e-3 (residual ~ 50x band)
SMOOTH_BAND = 1e-5


@dataclass(frozen=True)
class BreakingCertificate:
    kappa: float
    theta0: float
    theta_used: float
    x0: float
    u0_h1: float
    u0_slope_at_x0: float
    y0: float
    U0: float
    epsilon0: float
    lambda0: float
    margin: float
    condition_holds: bool
    guaranteed: bool
    lam: float

    @property
    def threshold(self) -> float:
        """Right side of the steepness condition, min(-||u0||^(1/2), -||u0||^2)."""
        return min(-math.sqrt(self.u0_h1), -self.u0_h1**2)

    def positivity(self, lam: float) -> float:
        """eps0/(4 lam) + 1/y0; positive for every lam in (0, lambda0)."""
        return self.epsilon0 / (4.0 * lam) + 1.0 / self.y0

    def breaking_time_bound(self, lam: float) -> float:
        """Latest time the slope can stay finite when lam in (0, lambda0)."""
        a = self.epsilon0 / (4.0 * lam)
        return math.log(a / (a + 1.0 / self.y0)) / lam

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interpretation"] = NORM_POWER_NOTE
        return d


def certificate(u0: Field, params: EquationParams, ws: SpectralWorkspace | None = None
                ) -> BreakingCertificate:
    """All quantities of the breaking guarantee for ``u0``, with theta fixed at theta0.

    x0 is the global minimiser of u0' (grid argmin, smallest x on ties,
    polished off-grid). ``margin`` is the relative slack of the steepness
    condition, theta0 |y0| / max(||u0||^(1/2), ||u0||^2) - 1; the condition
    holds iff margin > 0 and y0 < 0.
    """
    ws = ws or workspace(u0.grid)
    norm = ws.sobolev_norm(u0.values, 1)
    x0, y0 = ws.refined_minimum(u0.values, order=1)
    k = params.kappa()
    theta = params.theta0()
    big_u = max(norm, norm**4)
    lhs = theta * y0
    rhs = min(-math.sqrt(norm), -norm**2)
    holds = lhs < rhs
    scale = -rhs
    if scale > 0:
        margin = -lhs / scale - 1.0
    else:
        margin = math.inf if lhs < 0 else -1.0
    if y0 != 0:
        eps0 = (theta**2 * y0**2 - big_u) / (theta**2 * y0**2)
    else:
        eps0 = -math.inf
    lam0 = -y0 * eps0 / 4.0 if y0 != 0 else 0.0
    guaranteed = holds and 0.0 < params.lam < lam0
    return BreakingCertificate(k, theta, theta, x0, norm, y0, y0, big_u, eps0, lam0, margin,
                               holds, guaranteed, params.lam)


def tune_amplitude(make_field, params: EquationParams, margin: float = 0.1,
                   lo: float = 1e-3, hi: float = 10.0, iters: int = 80) -> float:
    """Smallest amplitude a in [lo, hi] with certificate margin >= ``margin``.

    ``make_field(a)`` must return the initial field for amplitude ``a``. The
    margin rises then falls with amplitude, so the peak is located first by
    golden-section search and the rising flank is then bisected.
    """
    def m(a):
        return certificate(make_field(a), params).margin

    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    mc, md = m(c), m(d)
    for _ in range(iters):
        if mc > md:
            b, d, md = d, c, mc
            c = b - g * (b - a)
            mc = m(c)
        else:
            a, c, mc = c, d, md
            d = a + g * (b - a)
            md = m(d)
    peak = 0.5 * (a + b)
    if m(peak) < margin:
        raise ValueError(f"margin {margin} unreachable: best is {m(peak):.4g} at amplitude {peak:.4g}")
    a, b = lo, peak
    if m(a) >= margin:
        return a
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if m(mid) >= margin:
            b = mid
        else:
            a = mid
    return b


# ---------------------------------------------------------------------------
# slope trace

@dataclass(frozen=True)
class SlopeSample:
    t: float
    y: float
    xi: float
    u_xi: float
    f_xi: float
    g_xi: float
    g_plus_xi: float
    h_h1: float
    band: float

    @property
    def forcing(self) -> float:
        """u^2 - F - G at xi."""
        return self.u_xi**2 - self.f_xi - self.g_xi

    @property
    def resolved(self) -> bool:
        return self.band <= SMOOTH_BAND


def slope_sample(t: float, values, params: EquationParams, ws: SpectralWorkspace) -> SlopeSample:
    xi, y = ws.refined_minimum(values, order=1)
    _, f_field, g_field = slope_forcing(values, params, ws)
    hu = ws.backward(ws.truncated(h_values(ws.padded(ws.forward(values)), params)))
    g_plus = hu + ws.helmholtz_inverse(hu)
    u_xi, f_xi, g_xi, gp_xi = ws.interpolate(np.stack([values, f_field, g_field, g_plus]), [xi])[:, 0]
    return SlopeSample(float(t), y, xi, float(u_xi), float(f_xi), float(g_xi), float(gp_xi),
                       ws.sobolev_norm(hu, 1), ws.band_amplitude(values))


def _segments(trace, dx):
    """Split into runs of resolved samples with no argmin jump between neighbours."""
    segments, current, jumps = [], [], []
    for s in trace:
        if not s.resolved:
            if current:
                segments.append(current)
            current = []
            continue
        if current and abs(s.xi - current[-1].xi) > JUMP_CELLS * dx:
            jumps.append(s.t)
            segments.append(current)
            current = []
        current.append(s)
    if current:
        segments.append(current)
    return segments, jumps


def _uniform_runs(segment, rel=1e-9):
    runs, current = [], [segment[0]]
    for prev, s in zip(segment, segment[1:]):
        h = s.t - prev.t
        if len(current) > 1 and abs(h - (current[1].t - current[0].t)) > rel * max(1.0, h):
            runs.append(current)
            current = [prev]
        current.append(s)
    runs.append(current)
    return runs


@dataclass(frozen=True)
class SlopeOdeReport:
    max_residual: float
    segment_residuals: tuple
    jumps: tuple
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray


def slope_ode_residual(trace, params: EquationParams, dx: float) -> SlopeOdeReport:
    """Residual of y' + y^2/2 + lambda y = u^2 - F - G on the smooth part of a trace.

    Smooth means resolved (top-band amplitude at most SMOOTH_BAND) with no argmin displacement
    over ``5 dx`` between neighbouring samples. y' is the fourth-order
    centred difference, so only interior points of runs of at least five
    equally spaced samples are evaluated. Argmin jumps split the trace and
    are listed in ``jumps``.
    """
    segments, jumps = _segments(trace, dx)
    per_segment, times, lhs_all, rhs_all = [], [], [], []
    for seg in segments:
        worst = 0.0
        evaluated = False
        for run_ in _uniform_runs(seg):
            if len(run_) < 5:
                continue
            h = run_[1].t - run_[0].t
            y = np.array([s.y for s in run_])
            dy = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
            mid = run_[2:-2]
            ym = y[2:-2]
            lhs = dy + 0.5 * ym**2 + params.lam * ym
            rhs = np.array([s.forcing for s in mid])
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            evaluated = True
            times.extend(s.t for s in mid)
            lhs_all.extend(lhs)
            rhs_all.extend(rhs)
        if evaluated:
            per_segment.append(worst)
    return SlopeOdeReport(max(per_segment, default=0.0), tuple(per_segment), tuple(jumps),
                          np.array(times), np.array(lhs_all), np.array(rhs_all))


def riccati_bound(u0_h1: float, params: EquationParams) -> float:
    """Upper bound for u^2 - F - G: ||u0||^2/4 + 3 kappa max(||u0||, ||u0||^4)."""
    return 0.25 * u0_h1**2 + 3.0 * params.kappa() * max(u0_h1, u0_h1**4)


def slope_inequality_margin(report: SlopeOdeReport, u0_h1: float, params: EquationParams) -> float:
    """min over smooth samples of bound - (y' + y^2/2 + lambda y); inf if none."""
    if report.lhs.size == 0:
        return math.inf
    return float(riccati_bound(u0_h1, params) - np.max(report.lhs))


def forcing_bounds(sample: SlopeSample, tol: float = 1e-10) -> tuple[bool, bool]:
    """(F >= u^2/2, |h -+ Lambda^-2 h| <= 3 ||h||_{H1}) at the slope minimum, both signs."""
    f_ok = sample.f_xi >= 0.5 * sample.u_xi**2 - tol
    bound = 3.0 * sample.h_h1 + tol
    g_ok = abs(sample.g_plus_xi) <= bound and abs(sample.g_xi) <= bound
    return f_ok, g_ok


def chain_violations(trace, cert: BreakingCertificate, lam: float) -> list:
    """Samples with y(t) < y(0) where e^{lam t}(eps0/(4lam) + 1/y0) > eps0/(4lam)."""
    if not (cert.guaranteed and lam > 0):
        return []
    a = cert.epsilon0 / (4.0 * lam)
    base = a + 1.0 / cert.y0
    return [s.t for s in trace if s.y < cert.y0 and math.exp(lam * s.t) * base > a]


# ---------------------------------------------------------------------------
# outcome

class Outcome(enum.Enum):
    BROKE = "Broke"
    GLOBAL_WINDOW = "GlobalWindow"
    INCONCLUSIVE = "Inconclusive"


def breaking_outcome(series, status, u0_h1: float, slope_floor: float = -1e4) -> Outcome:
    """Broke: slope blow-up with sup|u| <= ||u0||_{H1}(1 + 1e-6) throughout.

    GlobalWindow: reached t_end with every sampled slope above ``slope_floor``.
    Anything else is Inconclusive.
    """
    bounded = all(rec.sup_abs_u <= u0_h1 * (1.0 + 1e-6) for rec in series)
    if status.kind is Termination.BLOW_UP_DETECTED and status.reason == "slope_floor":
        return Outcome.BROKE if bounded else Outcome.INCONCLUSIVE
    if status.kind is Termination.REACHED_T_END:
        if all(math.isfinite(rec.slope_min) and rec.slope_min > slope_floor for rec in series):
            return Outcome.GLOBAL_WINDOW
    return Outcome.INCONCLUSIVE
