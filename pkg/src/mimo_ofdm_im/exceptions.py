"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid or incompatible configuration values."""


class InputSizeError(ValueError):
    """Input array has the wrong length for the requested operation."""


class DomainError(ValueError):
    """Value outside the domain of a mapping (e.g. a word too large)."""


class IllegalPatternError(ValueError):
    """Active-index pattern that has no bit label in the current mode."""


class CapacityError(ValueError):
    """Enumeration would exceed a configured size cap."""


class NotComputableError(ValueError):
    """Not enough valid data to compute the requested statistic."""


class NumericalError(ArithmeticError):
    """Matrix too badly conditioned to produce a trustworthy result."""
