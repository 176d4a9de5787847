"""Exception types shared across the package."""


class UavcovError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(UavcovError):
    """Invalid or inconsistent user-supplied configuration."""


class NumericalError(UavcovError):
    """A numerical procedure failed to produce a trustworthy result."""


class NonConvergenceError(NumericalError):
    """An iterative series or search exhausted its iteration budget."""


class PoleError(NumericalError):
    """A special-function parameter landed on (or too close to) a pole."""


class NoRootError(UavcovError):
    """The density polynomial has no admissible positive root."""

    def __init__(self, message, coefficients=None, config=None):
        super().__init__(message)
        self.coefficients = coefficients
        self.config = config
