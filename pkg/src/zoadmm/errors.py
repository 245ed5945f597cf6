"""Exception types shared across the package."""


class ZoadmmError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(ZoadmmError):
    """Shapes of A, B_j, c, or iterates do not line up."""


class RankDeficientA(ZoadmmError):
    """A fails the full-column-rank check required when constraint blocks exist."""


class IndexOutOfRange(ZoadmmError):
    """Sample index outside the oracle's index range."""


class NonFiniteValue(ZoadmmError):
    """An oracle evaluation returned NaN or infinity."""


class NonUnitDirection(ZoadmmError):
    """Direction vector passed to the two-point estimator is not unit length."""


class InfeasiblePoint(ZoadmmError):
    """Point lies outside an indicator penalty's feasible set."""


class InsufficientHistory(ZoadmmError):
    """Diagnostic window does not carry the iterate history it needs."""


class FactorizationFailure(ZoadmmError):
    """The exact x-update system could not be factorized (not SPD)."""


class NoFixedPoint(ZoadmmError):
    """Hyperparameter fixed-point iteration failed to converge."""


class ConfigError(ZoadmmError):
    """Invalid configuration value. Carries the offending field name when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
