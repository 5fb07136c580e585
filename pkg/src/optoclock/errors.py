"""Exception and warning types shared across the package."""


class OptoclockError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(OptoclockError):
    """Operator and state dimensions are incompatible."""


class TruncationError(OptoclockError):
    """Requested Fock truncation is too small to be meaningful."""


class TruncationWarning(UserWarning):
    """Evolved state carries non-negligible weight on the top Fock levels."""


class UndefinedSteadyStateError(OptoclockError):
    """Both bath occupations vanish, so the emitter has no unique fixed point."""


class NoInversionError(OptoclockError):
    """Population inversion is impossible for the given bath occupations."""


class UnsupportedRegimeError(OptoclockError):
    """Operation called outside the parameter regime it is defined for."""


class StepSizeError(OptoclockError):
    """Time step violates a stability or jump-probability bound."""


class BlowUpError(OptoclockError):
    """Mechanical amplitude exceeded the configured blow-up guard."""


class NotConvergedError(OptoclockError):
    """No periodic orbit was detected within the observation window."""


class FixedPointReachedError(OptoclockError):
    """Oscillation amplitude decayed below threshold; dynamics is stationary."""


class ConfigError(OptoclockError):
    """Experiment configuration file is invalid."""
