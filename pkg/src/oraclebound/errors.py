"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed runtime input: dimension mismatch, non-finite data, empty chain."""


class ConfigError(ValueError):
    """Invalid configuration values or combinations."""


class UnsupportedConfigError(ConfigError):
    """Configuration is valid but the requested operation does not support it."""


class BudgetError(RuntimeError):
    """An oracle was queried past its call budget."""


class StateError(RuntimeError):
    """Operation invoked in a state that does not admit it."""


class NumericalError(RuntimeError):
    """Non-finite oracle answers or a diverging numerical procedure."""


class ConvergenceError(NumericalError):
    """A solve hit its call cap before reaching the requested accuracy.

    Carries the last observed gap in ``gap``.
    """

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class DataError(ValueError):
    """Data unusable for the requested analysis (e.g. nonpositive residuals)."""
