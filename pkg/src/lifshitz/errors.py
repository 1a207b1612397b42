"""Exception types shared across the package."""


class LifshitzError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(LifshitzError, ValueError):
    """Parameters outside a family's certified box, or a violated precondition."""


class NumericOverflowError(LifshitzError, ArithmeticError):
    """A non-finite value appeared while iterating an orbit."""


class InconclusiveOrderError(LifshitzError):
    """The tangency-order fit was too poor to decide pass or fail."""


class AssumptionViolation(LifshitzError):
    """A hypothesis check failed; ``witness`` names where."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class BudgetExhausted(LifshitzError):
    """A step cap was hit; ``partial`` carries what was measured so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ChartSingularity(LifshitzError, ZeroDivisionError):
    """The affine projective chart was evaluated at its point at infinity."""


class InsufficientData(LifshitzError, ValueError):
    """Too few usable points for a fit."""


class ConfigError(LifshitzError, ValueError):
    """Malformed experiment configuration."""
