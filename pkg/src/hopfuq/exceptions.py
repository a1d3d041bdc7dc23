"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the domain where an operation is defined."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not meet the requested tolerance."""


class DomainExhausted(ArithmeticError):
    """A root search ran off the end of the field's domain without a bracket."""


class IntegrationError(ArithmeticError):
    """The ODE integrator could not continue (e.g. step-size underflow)."""
