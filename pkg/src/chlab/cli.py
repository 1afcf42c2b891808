"""Command line entry point: ``chlab <command> [config] [--out-dir DIR] [--quiet] [--threads N]``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import breaking, diagnostics, runner, selftest
from .config import load_config
from .core import ChlabError, ConfigError, Grid
from .initdata import realize
from .spectral import workspace

IDENTITY_TOL = 1e-8
THIRD_SHIFT = 3.0


def _emit(payload, out_dir, name, quiet):
    payload = runner.clean(payload)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(json.dumps(payload, indent=2) + "\n")
    if not quiet:
        print(json.dumps(payload, indent=2))


def cmd_simulate(args):
    cfg = load_config(args.config)
    runner.run_single(cfg, args.out_dir or ".", write_flow=args.flow, quiet=args.quiet)
    return 0


def cmd_certificate(args):
    cfg = load_config(args.config)
    u0 = realize(cfg.profile, cfg.sim.grid)
    cert = breaking.certificate(u0, cfg.sim.params,
                                workspace(cfg.sim.grid, cfg.sim.dealias_fraction))
    payload = cert.to_dict()
    lam = cfg.sim.params.lam
    payload["breaking_time_bound"] = cert.breaking_time_bound(lam) if cert.guaranteed else None
    _emit(payload, args.out_dir, "certificate.json", args.quiet)
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    runner.run_sweep(cfg, args.out_dir or ".", threads=args.threads, write_flow=args.flow,
                     quiet=args.quiet)
    return 0


def cmd_verify_identities(args):
    """Residuals on v = e^{-t} sin x + 0.3 e^{-2t} cos 2x.

    The box half-length is rounded to a multiple of pi so v is periodic.
    The square-root identity uses beta = gamma = 0, Gamma = -alpha and
    v + 3, for which v - v_xx > 1.2.
    """
    cfg = load_config(args.config)
    g = cfg.sim.grid
    grid = Grid(math.pi * max(1, round(g.half_length / math.pi)), g.n_points)
    params = cfg.sim.params
    rep = diagnostics.manufactured_residuals(params, grid)
    special = params.with_(beta=0.0, gamma=0.0, cap_gamma=-params.alpha)
    third = diagnostics.manufactured_residuals(special, grid, shift=THIRD_SHIFT, third=True)
    ok = max(rep.divergence_form, rep.energy_form, third.sqrt_form) <= IDENTITY_TOL
    _emit({"half_length": grid.half_length, "n_points": grid.n_points, "tolerance": IDENTITY_TOL,
           "divergence_form": rep.divergence_form, "energy_form": rep.energy_form,
           "sqrt_form": third.sqrt_form, "sqrt_form_shift": THIRD_SHIFT,
           "equation_residual_of_v": rep.equation, "pass": ok},
          args.out_dir, "identities.json", args.quiet)
    return 0 if ok else 1


def cmd_selftest(args):
    return 0 if selftest.run_checks(quiet=args.quiet) else 1


def _flags(suppress):
    # subcommand copies must not overwrite flags given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out-dir", default=d(None), help="output directory (default: cwd)")
    p.add_argument("--quiet", action="store_true", default=d(False),
                   help="suppress progress output")
    p.add_argument("--threads", type=int, default=d(1),
                   help="worker processes for sweep (ignored elsewhere)")
    return p


def build_parser():
    common = _flags(suppress=True)
    parser = argparse.ArgumentParser(prog="chlab", parents=[_flags(suppress=False)],
                                     description="Weakly dissipative CH-type solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (("simulate", cmd_simulate, True),
                                   ("certificate", cmd_certificate, True),
                                   ("sweep", cmd_sweep, True),
                                   ("verify-identities", cmd_verify_identities, True),
                                   ("selftest", cmd_selftest, False)):
        p = sub.add_parser(name, parents=[common])
        if needs_config:
            p.add_argument("config")
        if name in ("simulate", "sweep"):
            p.add_argument("--flow", action="store_true", help="also write flow.csv")
        p.set_defaults(func=fn, flow=False)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ChlabError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
