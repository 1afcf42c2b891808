"""Initial profiles with closed-form norms where available."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BoundaryLeakageError, Field, Grid, ValidationError
from .spectral import workspace

KINDS = ("gaussian", "gaussian_derivative", "sech_squared", "bump_train", "momentum_split")
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ProfileSpec:
    """One initial profile.

    ``extra`` is kind-specific: bump_train takes ``(count, spacing)``; the
    other kinds take nothing. For momentum_split the amplitude and width
    describe m0 = A (x - c) exp(-((x - c)/w)^2) and u0 is its Helmholtz
    inverse, so m0 changes sign exactly once, at c.
    """

    kind: str
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    extra: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}",
                                  field="kind")
        for name in ("amplitude", "width", "center"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("must be finite", field=name)
        if not self.width > 0:
            raise ValidationError("must be positive", field="width")
        extra = tuple(float(e) for e in self.extra)
        if self.kind == "bump_train":
            if len(extra) != 2 or extra[0] < 1 or extra[0] != int(extra[0]) or not extra[1] > 0:
                raise ValidationError("bump_train needs extra = (count >= 1, spacing > 0)",
                                      field="extra")
        elif extra:
            raise ValidationError(f"{self.kind} takes no extra parameters", field="extra")
        object.__setattr__(self, "extra", extra)

    def with_(self, **changes) -> ProfileSpec:
        from dataclasses import replace
        return replace(self, **changes)


def _sample(spec: ProfileSpec, x):
    a, w, c = spec.amplitude, spec.width, spec.center
    y = (x - c) / w
    if spec.kind == "gaussian":
        return a * np.exp(-y * y)
    if spec.kind == "gaussian_derivative":
        return a * (x - c) * np.exp(-y * y)
    if spec.kind == "sech_squared":
        return a / np.cosh(y) ** 2
    if spec.kind == "bump_train":
        count, spacing = int(spec.extra[0]), spec.extra[1]
        out = np.zeros_like(x)
        for j in range(count):
            out += a * np.exp(-(((x - c - j * spacing) / w) ** 2))
        return out
    return a * (x - c) * np.exp(-y * y)


def momentum0(spec: ProfileSpec, grid: Grid) -> np.ndarray:
    """m0 = u0 - u0'' on the grid."""
    if spec.kind == "momentum_split":
        return _sample(spec, grid.x)
    return workspace(grid).helmholtz(_sample(spec, grid.x))


def realize(spec: ProfileSpec, grid: Grid) -> Field:
    values = _sample(spec, grid.x)
    if spec.kind == "momentum_split":
        values = workspace(grid).helmholtz_inverse(values)
    u0 = Field(grid, values)
    if u0.edge_max() >= EDGE_TOL:
        raise BoundaryLeakageError(
            f"{spec.kind} profile reaches {u0.edge_max():.3e} near the box edge; "
            "narrow it or enlarge the box")
    return u0


def oracle_integral(spec: ProfileSpec) -> float | None:
    """Closed-form integral of u0 over the line, where one is known."""
    a, w = spec.amplitude, spec.width
    if spec.kind == "gaussian":
        return a * w * math.sqrt(math.pi)
    if spec.kind == "bump_train":
        return spec.extra[0] * a * w * math.sqrt(math.pi)
    if spec.kind == "sech_squared":
        return 2.0 * a * w
    return 0.0


def oracle_h1_norm(spec: ProfileSpec) -> float | None:
    """Closed-form ||u0||_{H1} on the line; None where no closed form is coded."""
    a, w = spec.amplitude, spec.width
    r = math.sqrt(math.pi / 2.0)
    if spec.kind == "gaussian":
        sq = a * a * r * (w + 1.0 / w)
    elif spec.kind == "gaussian_derivative":
        sq = a * a * r * (w**3 + 3.0 * w) / 4.0
    elif spec.kind == "sech_squared":
        sq = a * a * (4.0 * w / 3.0 + 16.0 / (15.0 * w))
    else:
        return None
    return math.sqrt(sq)
