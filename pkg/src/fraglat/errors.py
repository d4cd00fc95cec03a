"""Exception types shared across the package."""


class FraglatError(Exception):
    """Base class for all errors raised by fraglat."""


class ConfigError(FraglatError, ValueError):
    """Invalid or inconsistent configuration."""


class QbdValidationError(FraglatError, ValueError):
    """A block-structured transition matrix fails its structural checks."""


class NumericError(FraglatError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class ReducibleChainError(NumericError):
    """The phase process does not have a unique stationary vector."""
