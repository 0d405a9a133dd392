"""Exception types shared across the package."""


class SgDephaseError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SgDephaseError, ValueError):
    """Physical parameters violate an invariant or produce non-finite results."""


class DomainError(SgDephaseError, ValueError):
    """Argument outside the valid domain (e.g. time outside [0, tau])."""


class CorrelationError(SgDephaseError, ValueError):
    """Cross-spectral density violates the Cauchy-Schwarz bound."""


class CoverageError(SgDephaseError, ValueError):
    """Tabulated PSD grid does not cover the required frequency band."""


class InsufficientDataError(SgDephaseError, ValueError):
    """Too few samples for a statistically meaningful estimate."""


class QuadratureError(SgDephaseError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class ApproximationDomainError(SgDephaseError, ValueError):
    """Inputs outside the validity region of an asymptotic formula."""


class StepSizeError(SgDephaseError, RuntimeError):
    """Integrator step size too coarse (energy drift beyond tolerance)."""


class ConfigError(SgDephaseError, ValueError):
    """Malformed run configuration (unknown key, bad value, unit mismatch)."""
