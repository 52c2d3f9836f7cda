"""Exception types shared across the package."""


class NumericalError(ArithmeticError):
    """A filter quantity left its admissible range (e.g. negative innovation variance)."""


class ConfigError(ValueError):
    """Invalid experiment or scenario configuration."""


class SnapshotError(ValueError):
    """A snapshot file could not be read back into a model."""
