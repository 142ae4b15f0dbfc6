"""Exception types shared across the package."""


class JumpLimitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(JumpLimitError):
    """Invalid model, mesh, or run configuration."""


class StabilityError(JumpLimitError):
    """An explicit-scheme monotonicity/stability guard is violated."""


class ResourceError(JumpLimitError):
    """A run would exceed a configured size cap."""


class NumericalError(JumpLimitError):
    """Non-finite values appeared during a solve."""
