"""Exception types shared across the package."""


class LcrisError(Exception):
    """Base class for package errors."""


class ConfigError(LcrisError, ValueError):
    """Invalid or inconsistent configuration."""


class NumericalFailure(LcrisError, RuntimeError):
    """An iterative solver failed to reach its tolerance within its budget."""
