"""
Exception hierarchy for the one-bit massive MIMO toolkit.
"""


class OneBitMimoError(Exception):
    """Base class for every error raised by onebit_mimo."""


class ConfigError(OneBitMimoError, ValueError):
    """Invalid system parameters or experiment spec."""


class DimensionError(OneBitMimoError, ValueError):
    """Matrix or vector shapes do not line up."""


class DomainError(OneBitMimoError, ValueError):
    """Argument outside the domain of a formula (negative SNR, eta_sq > 1, ...)."""


class NumericalError(OneBitMimoError, ArithmeticError):
    """A matrix that must be positive definite is not."""
