"""Exception hierarchy shared by all hopfnet modules."""


class HopfNetError(Exception):
    """Base class for every error raised by this package."""


class InvalidSize(HopfNetError, ValueError):
    pass


class InvalidBulk(HopfNetError, ValueError):
    pass


class LeadingInsideBulk(HopfNetError, ValueError):
    pass


class BulkNotNegative(HopfNetError, ValueError):
    pass


class NotSymmetric(HopfNetError, ValueError):
    pass


class ConvergenceFailure(HopfNetError, RuntimeError):
    pass


class NonNegativeBulk(HopfNetError, ValueError):
    pass


class DegenerateLeading(HopfNetError, ValueError):
    pass


class DegenerateDenominator(HopfNetError, ZeroDivisionError):
    pass


class DimensionMismatch(HopfNetError, ValueError):
    pass


class NonFiniteState(HopfNetError, FloatingPointError):
    def __init__(self, t):
        super().__init__(f"state became non-finite at t={t!r}")
        self.t = t


class EmptyGrid(HopfNetError, ValueError):
    pass


class DaleViolation(HopfNetError, ValueError):
    pass


class AsymmetricC(HopfNetError, ValueError):
    pass


class PreconditionViolation(HopfNetError, ValueError):
    pass


class ConfigError(HopfNetError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, msg, line, column):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass
