"""Exception types shared across the package."""


class DataError(ValueError):
    """A corpus, record, or file violates the data contract."""


class ConfigError(ValueError):
    """A configuration value or combination is invalid."""


class NumericalError(RuntimeError):
    """A numerical routine failed (bracketing, divergence of all starts)."""


class EstimationError(RuntimeError):
    """A fitted model cannot produce the requested quantity."""
