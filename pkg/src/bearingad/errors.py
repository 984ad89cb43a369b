"""Exception types shared across the package."""


class BearingAdError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(BearingAdError, ValueError):
    """Input is valid in shape but a statistic is undefined for it (e.g. zero variance)."""


class DataError(BearingAdError, ValueError):
    """Malformed, insufficient or inconsistent data."""


class ConvergenceError(BearingAdError, RuntimeError):
    """An iterative solver hit its iteration cap."""
