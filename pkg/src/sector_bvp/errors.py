"""Exception types raised across the package."""


class SectorBVPError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SectorBVPError, ValueError):
    pass


class NonUnitaryBasis(SectorBVPError, ValueError):
    pass


class ZeroEigenvalue(SectorBVPError, ValueError):
    pass


class SectorViolation(SectorBVPError, ValueError):
    pass


class NonNormalMatrix(SectorBVPError, ValueError):
    pass


class IllConditionedMode(SectorBVPError, ArithmeticError):
    pass


class InvalidOrder(SectorBVPError, ValueError):
    pass


class EvaluationAtKink(SectorBVPError, ValueError):
    pass


class EmptyInterval(SectorBVPError, ValueError):
    pass


class MissingDerivativeData(SectorBVPError, ValueError):
    pass


class NonDecayingSource(SectorBVPError, ValueError):
    pass


class DidNotConverge(SectorBVPError, RuntimeError):
    """Fixed-point iteration hit its iteration cap or blew up.

    The partially iterated solution and the residual history are attached
    so callers can chart the divergence.
    """

    def __init__(self, message, solution=None, contraction_ratio=None):
        super().__init__(message)
        self.solution = solution
        self.contraction_ratio = contraction_ratio


class EpsilonOutOfRange(SectorBVPError, ValueError):
    pass


class BadOrdering(SectorBVPError, ValueError):
    pass


class ZeroDenominator(SectorBVPError, ZeroDivisionError):
    pass


class TruncationTooSmall(SectorBVPError, ValueError):
    pass


class SingularSystem(SectorBVPError, ArithmeticError):
    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class NonPositiveError(SectorBVPError, ValueError):
    pass


class ConfigParse(SectorBVPError, ValueError):
    pass


class ProblemFileInvalid(SectorBVPError, ValueError):
    pass
