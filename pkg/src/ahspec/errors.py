"""Exception hierarchy shared by all ahspec modules."""


class AhspecError(Exception):
    """Base class for every error raised by the library."""


class OutOfRange(AhspecError, ValueError):
    pass


class DegenerateMetric(AhspecError, ValueError):
    pass


class WrongVariant(AhspecError, TypeError):
    pass


class NotInCatalog(AhspecError, ValueError):
    pass


class MaxSubdivisions(AhspecError, RuntimeError):
    pass


class NonFinite(AhspecError, ArithmeticError):
    pass


class StiffFailure(AhspecError, RuntimeError):
    pass


class NoZero(AhspecError, RuntimeError):
    """The shooting solution stays positive on the whole integration range."""


class NotPositiveDefinite(AhspecError, ValueError):
    pass


class NoConvergence(AhspecError, RuntimeError):
    pass


class InsufficientData(AhspecError, ValueError):
    pass


class AllZeroRemainders(AhspecError):
    """Every remainder sample vanished: the expansion is exact on the window."""


class FitFailure(AhspecError, RuntimeError):
    pass


class MeshTooCoarse(AhspecError, RuntimeError):
    pass


class QuadFailure(AhspecError, RuntimeError):
    pass


class HypothesisViolation(AhspecError, ValueError):
    pass


class ViolationFound(AhspecError):
    """A checked inequality failed; carries the location for reporting."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ConfigError(AhspecError, ValueError):
    pass


class CorruptCache(AhspecError):
    pass
