"""Exception hierarchy shared by every module."""


class FiberMeasureError(Exception):
    """Base class for all library errors."""


class DivisionByZero(FiberMeasureError, ZeroDivisionError):
    pass


class PrecisionExhausted(FiberMeasureError):
    """A result is indistinguishable from zero at the tracked precision."""


class SingularAtPrecision(FiberMeasureError):
    pass


class ParseError(FiberMeasureError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownVariable(ParseError):
    pass


class CombinatorialBlowup(FiberMeasureError):
    pass


class NoContraction(FiberMeasureError):
    """Newton/Hensel precondition |F| < |det|^2 does not hold."""


class DepthExceeded(FiberMeasureError):
    pass


class EmptyLocus(FiberMeasureError):
    pass


class IrreducibleNotFound(FiberMeasureError):
    pass


class ZeroInverse(FiberMeasureError, ZeroDivisionError):
    pass


class UnresolvedFiber(FiberMeasureError):
    pass


class DepthInsufficient(FiberMeasureError):
    pass


class SingularCells(FiberMeasureError):
    pass


class BudgetExceeded(FiberMeasureError):
    pass


class NewtonDivergence(FiberMeasureError):
    pass


class StabilityUnknown(FiberMeasureError):
    pass


class ConfigError(FiberMeasureError):
    pass


class CheckFailed(FiberMeasureError):
    pass
