"""INI run configuration.

Sections and keys (``[params]`` and ``[profile] kind`` are required)::

    [params]    lambda alpha beta gamma cap_gamma           (default 0)
    [grid]      half_length n_points                        (default 20*pi, 1024)
    [run]       t_end dt_init dt_min slope_floor norm_cap sample_interval
                dealias_fraction cfl step_tolerance seed_stride snapshot_times
    [profile]   kind amplitude width center extra
    [sweep]     lambda lambda_rel alpha beta gamma cap_gamma amplitude

Numbers may be written as Python-style floats or as a multiple of ``pi``
(``20pi``, ``20*pi``). Lists are comma separated. ``lambda_rel`` gives
lambda as multiples of each cell's certificate lambda0. Unknown sections or
keys are errors.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .core import EquationParams, Grid, ParseError, SimConfig, ValidationError
from .initdata import ProfileSpec

PARAM_KEYS = {"lambda": "lam", "alpha": "alpha", "beta": "beta", "gamma": "gamma",
              "cap_gamma": "cap_gamma"}
GRID_KEYS = {"half_length": float, "n_points": int}
RUN_KEYS = {"t_end": float, "dt_init": float, "dt_min": float, "slope_floor": float,
            "norm_cap": float, "sample_interval": float, "dealias_fraction": float,
            "cfl": float, "step_tolerance": float, "seed_stride": int, "snapshot_times": list}
PROFILE_KEYS = {"kind": str, "amplitude": float, "width": float, "center": float, "extra": list}
SWEEP_AXES = ("lambda", "lambda_rel", "alpha", "beta", "gamma", "cap_gamma", "amplitude")
SECTIONS = {"params": PARAM_KEYS, "grid": GRID_KEYS, "run": RUN_KEYS, "profile": PROFILE_KEYS,
            "sweep": dict.fromkeys(SWEEP_AXES, list)}

_PI = re.compile(r"^([-+]?[0-9.eE+-]*)\s*\*?\s*pi$")


@dataclass(frozen=True)
class SweepSpec:
    axes: dict = field(default_factory=dict)

    def cells(self):
        """Cartesian product in the fixed axis order; empty when any listed axis is empty."""
        names = [a for a in SWEEP_AXES if a in self.axes]
        if not names:
            return []
        combos = [{}]
        for name in names:
            combos = [dict(c, **{name: v}) for c in combos for v in self.axes[name]]
        return combos


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig
    profile: ProfileSpec
    sweep: SweepSpec | None = None
    source: str | None = None


def parse_number(text: str) -> float:
    text = text.strip()
    m = _PI.match(text)
    if m:
        head = m.group(1)
        factor = 1.0 if head in ("", "+") else -1.0 if head == "-" else float(head)
        return factor * math.pi
    return float(text)


def _line_of(lines, section, key=None):
    current = None
    for no, raw in enumerate(lines, start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None:
            name = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            if name == key:
                return no
    return None


def _convert(kind, text, line, name):
    try:
        if kind is float:
            value = parse_number(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind is int:
            value = parse_number(text)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is list:
            return [parse_number(t) for t in text.split(",") if t.strip()]
        return text.strip()
    except ValueError:
        raise ParseError(f"cannot read {text!r} as {getattr(kind, '__name__', kind)}",
                         line=line, field=name) from None


def loads(text: str, source: str | None = None) -> RunConfig:
    lines = text.splitlines()
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside any section", line=exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).split(":")[-1].strip(), line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line=line) from None

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ParseError(f"unknown section [{section}]", line=_line_of(lines, section),
                             field=section)
        allowed = SECTIONS[section]
        values[section] = {}
        for key, raw in parser.items(section):
            line = _line_of(lines, section, key)
            if key not in allowed:
                raise ParseError(f"unknown key in [{section}]", line=line, field=key)
            kind = float if section == "params" else allowed[key]
            values[section][key] = _convert(kind, raw, line, f"{section}.{key}")

    if "params" not in values:
        raise ParseError("missing [params] section", field="params")
    if "kind" not in values.get("profile", {}):
        raise ParseError("missing [profile] kind", field="profile.kind")

    params = EquationParams(**{PARAM_KEYS[k]: v for k, v in values["params"].items()})
    grid = Grid(**values.get("grid", {}))
    run_kw = dict(values.get("run", {}))
    if "snapshot_times" in run_kw:
        run_kw["snapshot_times"] = tuple(run_kw["snapshot_times"])
    prof = dict(values["profile"])
    if "extra" in prof:
        prof["extra"] = tuple(prof["extra"])
    try:
        sim = SimConfig(params, grid, **run_kw)
    except ValidationError as exc:
        if exc.field is not None:
            exc.line = _line_of(lines, "run", exc.field)
        raise
    profile = ProfileSpec(**prof)
    sweep = SweepSpec(values["sweep"]) if "sweep" in values else None
    if sweep is not None and "lambda" in sweep.axes and "lambda_rel" in sweep.axes:
        raise ValidationError("give either lambda or lambda_rel, not both", field="sweep")
    return RunConfig(sim, profile, sweep, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    return loads(path.read_text(), str(path))


def _fmt(v) -> str:
    return repr(float(v)) if not isinstance(v, (list, tuple)) else ", ".join(repr(float(x)) for x in v)


def dumps(cfg: RunConfig) -> str:
    """Inverse of :func:`loads` (every key written explicitly)."""
    s, p, pr = cfg.sim, cfg.sim.params, cfg.profile
    out = ["[params]"]
    out += [f"{k} = {_fmt(getattr(p, attr))}" for k, attr in PARAM_KEYS.items()]
    out += ["", "[grid]", f"half_length = {_fmt(s.grid.half_length)}", f"n_points = {s.grid.n_points}",
            "", "[run]"]
    for k in RUN_KEYS:
        v = getattr(s, k)
        if k == "seed_stride":
            out.append(f"{k} = {v}")
        elif k == "snapshot_times":
            if v:
                out.append(f"{k} = {_fmt(v)}")
        else:
            out.append(f"{k} = {_fmt(v)}")
    out += ["", "[profile]", f"kind = {pr.kind}", f"amplitude = {_fmt(pr.amplitude)}",
            f"width = {_fmt(pr.width)}", f"center = {_fmt(pr.center)}"]
    if pr.extra:
        out.append(f"extra = {_fmt(pr.extra)}")
    if cfg.sweep is not None:
        out += ["", "[sweep]"] + [f"{k} = {_fmt(v)}" for k, v in cfg.sweep.axes.items()]
    return "\n".join(out) + "\n"
