"""Single runs and parameter sweeps, with CSV/JSON artifacts.

Data files (CSV) are byte-reproducible: values are written with 17
significant digits and nothing time-dependent goes into them. Wall-clock
time lives only in summary.json.
"""

from __future__ import annotations

import csv
import json
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import breaking, characteristics, diagnostics
from .config import RunConfig, dumps
from .core import ChlabError
from .diagnostics import DiagnosticsRecord
from .dynamics import SimState, run, step_rk4
from .initdata import realize
from .spectral import workspace

SCHEMA_VERSION = 1
INDEX_HEADER = ("cell_id", "lambda", "alpha", "beta", "gamma", "cap_gamma", "amplitude",
                "outcome", "lambda0", "guaranteed")
NOTES = (
    breaking.NORM_POWER_NOTE,
    "edge values above 1e-9 end a run only while the field is resolved; later exceedances "
    "are listed under leakage",
    "blow-up is flagged from the Eulerian slope minimum or from slopes carried along "
    "characteristics, whichever crosses slope_floor first",
    "identity residuals are evaluated on the computed solution over the first four steps "
    "of size 1e-3",
)


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x) -> str:
    return "%.17g" % x


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def clean(obj, path="", reasons=None):
    """Replace non-finite floats by None and record why in ``reasons``."""
    if reasons is None:
        reasons = {}
    if isinstance(obj, dict):
        return {k: clean(v, f"{path}.{k}" if path else k, reasons) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v, f"{path}[{i}]", reasons) for i, v in enumerate(obj)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        reasons[path] = "nan" if math.isnan(x) else ("positive_infinity" if x > 0
                                                     else "negative_infinity")
        return None
    if obj is None:
        reasons.setdefault(path, "not_applicable")
    return obj


def solution_residuals(u0, params, ws, step: float = 1e-3):
    """identity_residuals on the solver's own solution over four RK4 steps."""
    state = SimState(0.0, u0)
    slices = [u0.values]
    for _ in range(4):
        state = step_rk4(state, step, params, ws)
        slices.append(state.u.values)
    return diagnostics.identity_residuals(slices, step, params, u0.grid)


def _snapshot_rows(field, ws):
    m = ws.helmholtz(field.values)
    return zip(field.grid.x, field.values, m)


def _flow_rows(trace):
    for t, q, lq, s, mq in zip(trace.times, trace.q, trace.log_qx, trace.slopes, trace.m_q):
        for i in range(len(q)):
            yield (float(i), t, trace.seeds[i], q[i], lq[i], s[i], mq[i])


def run_single(cfg: RunConfig, out_dir, write_flow: bool = False, quiet: bool = True) -> dict:
    """Run one configuration and write timeseries.csv, snapshot CSVs and summary.json.

    Returns the summary as written (non-finite numbers replaced by null with
    a reason under ``null_reasons``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = cfg.sim
    params = sim.params
    start = time.perf_counter()
    u0 = realize(cfg.profile, sim.grid)
    ws = workspace(sim.grid, sim.dealias_fraction)
    cert = breaking.certificate(u0, params, ws)
    result = run(sim, u0)
    wall = time.perf_counter() - start

    write_csv(out / "timeseries.csv", DiagnosticsRecord.CSV_HEADER,
              (r.as_row() for r in result.series))
    snaps = {}
    for t, field in sorted(result.snapshots.items()):
        name = f"snapshot_t{t:.6f}.csv"
        write_csv(out / name, ("x", "u", "m"), _snapshot_rows(field, ws))
        snaps[name] = t
    if write_flow:
        write_csv(out / "flow.csv", ("seed_index", "t", "seed", "q", "log_qx", "slope", "m"),
                  _flow_rows(result.flow_trace))

    u0_h1 = cert.u0_h1
    decay = diagnostics.verify_decay(result.series, params.lam)
    residuals = solution_residuals(result.u0, params, ws)
    transport = characteristics.transport_identity_residual(result.flow_trace, params)
    positive, ordered = characteristics.flow_structure(result.flow_trace)
    outcome = breaking.breaking_outcome(result.series, result.status, u0_h1, sim.slope_floor)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "software_version": version(),
        "config": {"text": dumps(cfg), "source": cfg.source},
        "certificate": cert.to_dict(),
        "status": result.status.to_dict(),
        "outcome": outcome.value,
        "final": result.series[-1].to_dict(),
        "samples": len(result.series),
        "decay": decay.to_dict(),
        "residuals": residuals.to_dict(),
        "transport": {"max_relative_residual": transport.max_relative_residual,
                      "integral_term_sup": transport.integral_term_sup,
                      "scale": transport.scale},
        "flow": {"q_x_positive": positive, "ordered": ordered,
                 "seeds": int(len(result.flow_trace.seeds))},
        "leakage": {"edge_max": result.edge_max, "edge_exceeded_at": result.edge_exceeded_at,
                    "unresolved_since": result.unresolved_since},
        "steps": {"accepted": result.accepted_steps, "rejected": result.rejected_steps},
        "snapshots": snaps,
        "wall_clock_seconds": wall,
        "notes": list(NOTES),
    }
    if params.h_vanishes:
        sign = characteristics.sign_preservation_check(result.flow_trace, params, u0_h1,
                                                       result.series)
        summary["sign"] = {"preserved": sign.preserved, "violations": sign.violations,
                           "hypothesis_met": sign.hypothesis_met,
                           "slope_bound_holds": sign.slope_bound_holds,
                           "min_slope_margin": sign.min_slope_margin}
    reasons = {}
    summary = clean(summary, reasons=reasons)
    summary["null_reasons"] = dict(sorted(reasons.items()))
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    if not quiet:
        print(f"{result.status.kind.value} at t={result.status.t:.6g} ({outcome.value}); "
              f"{len(result.series)} samples in {wall:.1f}s -> {out}")
    return summary


# ---------------------------------------------------------------------------
# sweeps

def cell_config(cfg: RunConfig, cell: dict) -> RunConfig:
    """Apply one sweep cell's overrides; ``lambda_rel`` is resolved via the certificate."""
    names = {"lambda": "lam", "alpha": "alpha", "beta": "beta", "gamma": "gamma",
             "cap_gamma": "cap_gamma"}
    params = cfg.sim.params.with_(**{names[k]: v for k, v in cell.items() if k in names})
    profile = cfg.profile
    if "amplitude" in cell:
        profile = profile.with_(amplitude=cell["amplitude"])
    if "lambda_rel" in cell:
        cert = breaking.certificate(realize(profile, cfg.sim.grid), params,
                                    workspace(cfg.sim.grid, cfg.sim.dealias_fraction))
        if not (math.isfinite(cert.lambda0) and cert.lambda0 > 0):
            raise ChlabError(f"lambda_rel needs lambda0 > 0, certificate gives {cert.lambda0}")
        params = params.with_(lam=cell["lambda_rel"] * cert.lambda0)
    return replace(cfg, sim=cfg.sim.with_(params=params), profile=profile, sweep=None)


def _run_cell(args):
    cell_id, cfg, cell, out_dir, write_flow = args
    cell_dir = Path(out_dir) / "cells" / f"cell_{cell_id:04d}"
    try:
        cc = cell_config(cfg, cell)
        p = cc.sim.params
        row = [cell_id, p.lam, p.alpha, p.beta, p.gamma, p.cap_gamma, cc.profile.amplitude]
        summary = run_single(cc, cell_dir, write_flow=write_flow)
        cert = summary["certificate"]
        lam0 = cert["lambda0"]
        row += [summary["outcome"], "" if lam0 is None else lam0,
                "true" if cert["guaranteed"] else "false"]
        return row, None
    except Exception as exc:  # recorded per cell, the sweep carries on
        cell_dir.mkdir(parents=True, exist_ok=True)
        (cell_dir / "error.txt").write_text(traceback.format_exc())
        p = cfg.sim.params
        lam = cell.get("lambda", p.lam)
        row = [cell_id, lam, cell.get("alpha", p.alpha), cell.get("beta", p.beta),
               cell.get("gamma", p.gamma), cell.get("cap_gamma", p.cap_gamma),
               cell.get("amplitude", cfg.profile.amplitude), "Error", "", "false"]
        return row, f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: RunConfig, out_dir, threads: int = 1, write_flow: bool = False,
              quiet: bool = True) -> list:
    """Run every sweep cell (``threads`` worker processes) and write index.csv.

    Rows are ordered by cell_id, which follows the axis order
    lambda, lambda_rel, alpha, beta, gamma, cap_gamma, amplitude. A failed
    cell gets outcome ``Error`` and its traceback in ``cells/cell_NNNN/error.txt``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = cfg.sweep.cells() if cfg.sweep is not None else []
    jobs = [(i, cfg, cell, str(out), write_flow) for i, cell in enumerate(cells)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    results.sort(key=lambda r: r[0][0])
    rows = []
    for row, err in results:
        rows.append(row)
        if err and not quiet:
            print(f"cell {row[0]}: {err}")
    with open(out / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_HEADER)
        for row in rows:
            w.writerow([str(row[0])] + [v if isinstance(v, str) else fmt(v) for v in row[1:]])
    if not quiet:
        print(f"{len(rows)} cells -> {out / 'index.csv'}")
    return rows

