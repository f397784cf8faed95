"""Equilibrium-driven separation and navigation of carrier-passenger robot pairs."""

from .core import EPS_SEP, ConfigurationError, ErrorTriple, Mode, Params, WorldState, compute_errors, validate
from .potential import EquilibriumSet, Regime, equilibria, eval_P, sweep_P
from .sim import SimConfig, Trajectory, run, separation_time_oracle, step

__all__ = [
    "EPS_SEP", "ConfigurationError", "ErrorTriple", "Mode", "Params", "WorldState",
    "compute_errors", "validate", "EquilibriumSet", "Regime", "equilibria", "eval_P",
    "sweep_P", "SimConfig", "Trajectory", "run", "separation_time_oracle", "step",
]
