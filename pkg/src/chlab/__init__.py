"""Pseudospectral solver and wave-breaking diagnostics for weakly dissipative CH-type equations."""

from .breaking import BreakingCertificate, Outcome, certificate, tune_amplitude
from .config import RunConfig, load_config, loads
from .core import EquationParams, Field, Grid, SimConfig
from .dynamics import RunResult, Termination, TerminalStatus, run
from .initdata import ProfileSpec, realize
from .runner import run_single, run_sweep

__all__ = [
    "BreakingCertificate", "EquationParams", "Field", "Grid", "Outcome", "ProfileSpec",
    "RunConfig", "RunResult", "SimConfig", "TerminalStatus", "Termination", "certificate",
    "load_config", "loads", "realize", "run", "run_single", "run_sweep", "tune_amplitude",
]
