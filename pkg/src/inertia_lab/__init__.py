"""Simulation laboratory for second-order dissipative dynamics

    x'' + c / (1 + t)**alpha * x' + grad Phi(x) = g(t)

with checks of the energy decay and trajectory convergence they predict.
"""

from .damping import DampingSchedule, HTable, build_h_table
from .errors import ConfigurationError, HypothesisError, NumericFailure, StiffnessFailure
from .integrate import SolverSettings, State, TrajectorySample, integrate, integrate_reference

__version__ = "0.1.0"

__all__ = [
    "DampingSchedule",
    "HTable",
    "build_h_table",
    "ConfigurationError",
    "HypothesisError",
    "NumericFailure",
    "StiffnessFailure",
    "SolverSettings",
    "State",
    "TrajectorySample",
    "integrate",
    "integrate_reference",
]
