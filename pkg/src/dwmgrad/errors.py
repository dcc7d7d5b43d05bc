"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid optimizer, objective or experiment configuration."""


class NumericalError(ArithmeticError):
    """A loss, gradient or parameter became non-finite."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        # partially recorded trajectory, if the failure happened inside a run
        self.partial = partial


class InvariantError(RuntimeError):
    """An internal invariant was violated. Always a bug."""


class MissingFieldError(KeyError):
    """A trajectory lacks a field an audit needs (e.g. raw parameters)."""
