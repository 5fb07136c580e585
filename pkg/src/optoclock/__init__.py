"""Simulation and analysis toolkit for an autonomous optomechanical clock.

The model couples one or more thermally driven three-level emitters to a
cavity mode whose radiation pressure drives a damped mechanical
oscillator. Photons emitted into the cold bath are the clock's ticks.
The package integrates the deterministic mean-field dynamics, unravels
the tick statistics as quantum-jump trajectories, and quantifies clock
performance (accuracy, resolution, Allan variance) against its
thermodynamic cost (entropy production, uncertainty-relation bounds).
"""

__version__ = "0.1.0"

from .params import ClockParams, ideal_regime_report
from .errors import (
    BlowUpError, ConfigError, DimensionMismatchError, FixedPointReachedError,
    NoInversionError, NotConvergedError, OptoclockError, StepSizeError,
    TruncationError, TruncationWarning, UndefinedSteadyStateError,
    UnsupportedRegimeError,
)

__all__ = [
    "ClockParams",
    "ideal_regime_report",
    "OptoclockError",
    "BlowUpError",
    "ConfigError",
    "DimensionMismatchError",
    "FixedPointReachedError",
    "NoInversionError",
    "NotConvergedError",
    "StepSizeError",
    "TruncationError",
    "TruncationWarning",
    "UndefinedSteadyStateError",
    "UnsupportedRegimeError",
    "__version__",
]
