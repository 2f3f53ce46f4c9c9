"""Exception types shared across the package."""


class HLGrowthError(Exception):
    """Base class for all package errors."""


class DomainError(HLGrowthError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(HLGrowthError, ArithmeticError):
    """Evaluation hit a singular point of a slit map.

    ``index`` is the (1-based) particle index of the offending factor when the
    failure happened inside a composition, otherwise ``None``.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalFailure(HLGrowthError, ArithmeticError):
    """A computed quantity became zero, non-finite or underflowed."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class QuadratureError(HLGrowthError, ArithmeticError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
