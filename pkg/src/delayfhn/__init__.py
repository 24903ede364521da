"""Delayed self-coupled FitzHugh-Nagumo system: simulation and bifurcation analysis."""

from .errors import *  # noqa: F401,F403
from .model import FastParams, State, SystemParams, fast_rhs, full_rhs
from .solver import SolverConfig, Trajectory, dense_eval, detect_crossings, integrate

__version__ = "0.1.0"

__all__ = ["FastParams", "State", "SystemParams", "fast_rhs", "full_rhs", "SolverConfig",
           "Trajectory", "dense_eval", "detect_crossings", "integrate", "__version__"]
