"""Exception types shared across the package."""


class EpibranchError(Exception):
    """Base class for all package-specific errors."""


class CapacityError(EpibranchError):
    """A requested table or simulation would exceed the configured memory budget."""


class HorizonError(EpibranchError, ValueError):
    """A requested time index lies beyond the constructed horizon."""


class ExplosionError(EpibranchError, RuntimeError):
    """A simulated population exceeded the particle-slot guard."""


class DivergenceError(EpibranchError, RuntimeError):
    """An iterated functional left its guarded numerical range."""


class ConfigError(EpibranchError, ValueError):
    """An experiment configuration failed validation."""
