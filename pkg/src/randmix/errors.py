"""Exception types shared across the package."""

__all__ = [
    "RandmixError",
    "DomainError",
    "AdmissibilityError",
    "CurveError",
    "HorizonError",
    "ConfigError",
]


class RandmixError(Exception):
    """Base class for all package errors."""


class DomainError(RandmixError, ValueError):
    """A parameter or argument lies outside its admissible domain."""


class AdmissibilityError(DomainError):
    """Mixer values leave the Esscher domain of the driver.

    Carries the offending (u, x, h) witness when one is known.
    """

    def __init__(self, message: str, witness: tuple | None = None):
        super().__init__(message)
        self.witness = witness


class CurveError(RandmixError, ValueError):
    """Initial discount curve violates no-arbitrage shape constraints."""


class HorizonError(RandmixError, ValueError):
    """Semi-infinite integrand shows no decay at the truncation horizon."""


class ConfigError(RandmixError, ValueError):
    """Scenario configuration file is malformed or inconsistent."""
