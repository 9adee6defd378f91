"""Exception types shared across the package."""


class KsubmaxError(Exception):
    """Base class for all library errors."""


class LengthMismatch(KsubmaxError):
    """Two assignment vectors (or a vector and an instance) disagree in length."""


class BadDimension(KsubmaxError):
    """Dimension count or dimension index outside the valid range."""


class ZeroCost(KsubmaxError):
    """An element cost below 1; densities and transformation rates need c(e) >= 1."""


class EmptyFeasibleSet(KsubmaxError):
    """Budget below the cheapest element, so no non-empty solution is feasible."""


class AlreadyAssigned(KsubmaxError):
    """Marginal gain requested for an element already in the support."""


class NotComparable(KsubmaxError):
    """Solution difference y \\ x requested without x preceding y."""


class ShapeMismatch(KsubmaxError):
    """Input incompatible with an oracle's ground set or dimension count."""


class TooLarge(KsubmaxError):
    """Exhaustive enumeration requested beyond the supported size caps."""


class StartTooExpensive(KsubmaxError):
    """Greedy start solution already exceeds the budget."""


class CostMismatch(KsubmaxError):
    """Transformation path endpoints do not have equal cost."""


class InfeasibleSchedule(KsubmaxError):
    """No decrease schedule satisfies the start-ordering rule for this trace."""


class BadEpsilon(KsubmaxError):
    """Threshold accuracy parameter outside (0, 1)."""


class RejectionBudgetExceeded(KsubmaxError):
    """Rejection sampling hit its resample cap without a certified table."""


class SchemaError(KsubmaxError):
    """Instance file missing fields or structurally invalid."""


class IoError(KsubmaxError):
    """Instance file could not be read or written."""
