class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(ArithmeticError):
    """A computed intermediate violated an invariant it must satisfy."""
