"""Shared domain types: equation coefficients, periodic grid, sampled fields, run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np


class ChlabError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteError(ChlabError):
    """A NaN or Inf appeared in a field during evaluation."""


class DomainViolation(ChlabError, ValueError):
    """An operation was called outside the domain where it is defined."""


class BoundaryLeakageError(ChlabError):
    """A field is not negligible near the edges of the periodic box."""


class InterpolationBreakdown(ChlabError):
    """Off-grid evaluation requested for a field that is not periodic-safe."""


class ConfigError(ChlabError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(ConfigError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True)
class EquationParams:
    """Coefficients of one member of the equation family.

    ``lam`` is the weak-dissipation coefficient, ``cap_gamma`` multiplies
    ``u_xxx``. With everything zero the equation is Camassa-Holm.
    """

    lam: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    cap_gamma: float = 0.0

    def __post_init__(self):
        for name in ("lam", "alpha", "beta", "gamma", "cap_gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError("must be finite", field=name)
            object.__setattr__(self, name, float(value))

    def kappa(self) -> float:
        return kappa(self)

    def theta0(self) -> float:
        return theta0(self)

    @property
    def h_vanishes(self) -> bool:
        """True when the nonlocal source h(u) is identically zero."""
        return self.alpha + self.cap_gamma == 0.0 and self.beta == 0.0 and self.gamma == 0.0

    def with_(self, **changes) -> EquationParams:
        return replace(self, **changes)


def kappa(params: EquationParams) -> float:
    return max(abs(params.alpha), abs(params.beta) / 3.0, abs(params.gamma) / 4.0,
               abs(params.cap_gamma))


def theta0(params: EquationParams) -> float:
    return math.sqrt(2.0 / (1.0 + 12.0 * kappa(params)))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L) with N nodes, N a power of two >= 16."""

    half_length: float = 20.0 * math.pi
    n_points: int = 1024

    def __post_init__(self):
        if not (math.isfinite(self.half_length) and self.half_length > 0):
            raise ValidationError("must be a positive finite number", field="half_length")
        n = self.n_points
        if int(n) != n or n < 16 or (int(n) & (int(n) - 1)) != 0:
            raise ValidationError("must be a power of two >= 16", field="n_points")
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "n_points", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + self.spacing * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order: (pi/L) * j, j = 0..N/2-1, -N/2..-1."""
        k = (math.pi / self.half_length) * np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)
        k.flags.writeable = False
        return k

    @property
    def k_max(self) -> float:
        """Magnitude of the Nyquist wavenumber."""
        return math.pi / self.half_length * (self.n_points // 2)

    def edge_mask(self, fraction: float = 0.05) -> np.ndarray:
        """Nodes lying in the outer ``fraction`` of the box on either side."""
        dist = self.half_length - np.abs(self.x)
        return dist <= fraction * self.length


@dataclass(frozen=True)
class Field:
    """A real function sampled on a Grid."""

    grid: Grid
    values: np.ndarray
    blowup: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {values.shape}")
        if not self.blowup and not np.all(np.isfinite(values)):
            raise NonFiniteError("field contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> Field:
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        return cls(grid, np.zeros(grid.n_points))

    def like(self, values) -> Field:
        return Field(self.grid, values)

    def edge_max(self, fraction: float = 0.05) -> float:
        return float(np.max(np.abs(self.values[self.grid.edge_mask(fraction)])))


def max_dealias_fraction(params: EquationParams) -> float:
    """Largest admissible retained fraction of k_max for the strongest nonlinearity."""
    if params.gamma != 0.0:
        return 2.0 / 5.0
    return 1.0 / 2.0


@dataclass(frozen=True)
class SimConfig:
    params: EquationParams
    grid: Grid = field(default_factory=Grid)
    t_end: float = 5.0
    dt_init: float = 1e-2
    dt_min: float = 1e-9
    slope_floor: float = -1e4
    norm_cap: float = 1e6
    sample_interval: float = 0.05
    dealias_fraction: float = 0.4
    cfl: float = 0.5
    step_tolerance: float = 1e-10
    seed_stride: int = 8
    snapshot_times: tuple = ()

    def __post_init__(self):
        for name in ("t_end", "dt_init", "dt_min", "slope_floor", "norm_cap",
                     "sample_interval", "dealias_fraction", "cfl", "step_tolerance"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("must be finite", field=name)
        if not self.t_end > 0:
            raise ValidationError("must be positive", field="t_end")
        if not 0 < self.dt_min < self.dt_init:
            raise ValidationError("need 0 < dt_min < dt_init", field="dt_min")
        if not self.slope_floor < 0:
            raise ValidationError("must be negative", field="slope_floor")
        if not self.norm_cap > 0:
            raise ValidationError("must be positive", field="norm_cap")
        if not self.sample_interval > 0:
            raise ValidationError("must be positive", field="sample_interval")
        if not 0 < self.cfl <= 1:
            raise ValidationError("must lie in (0, 1]", field="cfl")
        if not self.step_tolerance > 0:
            raise ValidationError("must be positive", field="step_tolerance")
        if int(self.seed_stride) != self.seed_stride or self.seed_stride < 1:
            raise ValidationError("must be a positive integer", field="seed_stride")
        limit = max_dealias_fraction(self.params)
        if not 0 < self.dealias_fraction <= limit:
            which = "gamma != 0 (quartic)" if self.params.gamma != 0 else "gamma = 0"
            raise ValidationError(f"must lie in (0, {limit:g}] when {which}",
                                  field="dealias_fraction")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(not (0 <= t <= self.t_end) for t in times):
            raise ValidationError("snapshot times must lie in [0, t_end]", field="snapshot_times")
        object.__setattr__(self, "snapshot_times", tuple(sorted(times)))

    def with_(self, **changes) -> SimConfig:
        return replace(self, **changes)
