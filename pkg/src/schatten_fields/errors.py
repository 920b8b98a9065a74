"""Exception hierarchy shared by all modules."""


class SchattenFieldsError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SchattenFieldsError, ValueError):
    pass


class IndexOutOfRange(SchattenFieldsError, IndexError):
    pass


class BadExponent(SchattenFieldsError, ValueError):
    pass


class NotPositive(SchattenFieldsError, ValueError):
    pass


class NonMonotone(SchattenFieldsError, ValueError):
    """A supposedly nonnegative series increment was negative."""


class PreconditionFailed(SchattenFieldsError, ValueError):
    pass


class InvalidProjection(SchattenFieldsError, ValueError):
    pass


class NotPartitionOfUnity(SchattenFieldsError, ValueError):
    pass


class NotInModule(SchattenFieldsError, ValueError):
    pass


class NotModuleOperator(SchattenFieldsError, ValueError):
    pass


class RankOutOfRange(SchattenFieldsError, ValueError):
    pass


class BoundViolated(SchattenFieldsError, ArithmeticError):
    """A proven inequality failed numerically; always an implementation bug."""


class TruncationTooDeep(SchattenFieldsError, ValueError):
    pass


class OutsideConvergenceRadius(SchattenFieldsError, ValueError):
    def __init__(self, message, radius_product=None):
        super().__init__(message)
        self.radius_product = radius_product


class OutOfHalfPlane(SchattenFieldsError, ValueError):
    pass


class NotContraction(SchattenFieldsError, ValueError):
    pass


class BadAngle(SchattenFieldsError, ValueError):
    pass


class InsufficientSamples(SchattenFieldsError, ValueError):
    pass


class GridTooCoarse(SchattenFieldsError, ValueError):
    pass


class BadDomain(SchattenFieldsError, ValueError):
    pass


class NotCommuting(SchattenFieldsError, ValueError):
    pass


class ConfigError(SchattenFieldsError):
    """Malformed CLI input or configuration."""


class CheckFailed(SchattenFieldsError):
    """A property check or precondition failed during a CLI run."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])
