"""Exception and warning classes raised by massflow."""


class MassflowError(Exception):
    """Base class for all massflow errors."""


class BadGrid(MassflowError, ValueError):
    pass


class GridTooCoarse(MassflowError, ValueError):
    pass


class NonPositiveU(MassflowError, ValueError):
    pass


class NonPositiveArea(MassflowError, ValueError):
    pass


class PerturbationTooLarge(MassflowError, ValueError):
    pass


class HorizonInsideGrid(MassflowError, ValueError):
    pass


class OutOfRange(MassflowError, ValueError):
    pass


class RejectionLimitExceeded(MassflowError, RuntimeError):
    pass


class NumericalFailure(MassflowError, RuntimeError):
    """A computation ran but did not produce a trustworthy number."""


class NonConvergent(NumericalFailure):
    pass


class InsufficientDecay(NumericalFailure):
    pass


class GaugeBreakdown(NumericalFailure):
    pass


class Overflow(NumericalFailure):
    """u exceeded the overflow guard; read as horizon formation."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class StepSizeUnderflow(NumericalFailure):
    pass


class ResidualExceeded(NumericalFailure):
    pass


class AllStrategiesFailed(NumericalFailure):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or {}


class NoSolution(NumericalFailure):
    pass


class NoHorizon(MassflowError, ValueError):
    pass


class NonPositiveMeanCurvature(UserWarning):
    """Emitted when a coordinate sphere has min H <= 0 (quasi-spherical gauge breakdown)."""
