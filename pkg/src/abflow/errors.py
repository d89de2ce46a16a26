"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """A series or quadrature failed to meet the requested tolerance.

    Carries the best value obtained and the estimated error bound so callers
    can decide whether to degrade gracefully.
    """

    def __init__(self, message, value=None, bound=None):
        super().__init__(message)
        self.value = value
        self.bound = bound


class ConfigError(ValueError):
    """A run configuration violates a documented precondition."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)
