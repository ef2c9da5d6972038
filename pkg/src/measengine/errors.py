"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible Hilbert-space dimensions."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class NumericalError(ArithmeticError):
    """An iterative numerical routine failed to converge."""


class InvariantViolation(AssertionError):
    """A computed result breaks one of the bookkeeping identities."""
