"""Exception hierarchy shared by the numerical modules and the CLI."""


class RadchainError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NumericalAccuracyError(RadchainError):
    """A quadrature or refinement check failed to meet its tolerance."""

    exit_code = 1


class ConfigError(RadchainError, ValueError):
    """Invalid or inconsistent model/run configuration."""

    exit_code = 2


class PreflightError(RadchainError):
    """Admissibility / denominator pre-flight failed for the chosen parameters."""

    exit_code = 3


class SingularDenominatorError(PreflightError):
    """``1 - v^4 f_{N-1,N-1} f^sigma`` vanished (to threshold) at ``location``."""

    def __init__(self, location, value, message=None):
        self.location = location
        self.value = value
        super().__init__(
            message
            or f"resolvent denominator |1 - v^4 f f^sigma| = {value:.3e} at p = {location!r}"
        )


class PoleError(RadchainError, ZeroDivisionError):
    """Evaluation of a chain resolvent element exactly at an eigenvalue."""

    def __init__(self, pole):
        self.pole = pole
        super().__init__(f"f_mn evaluated at the pole x_j = {pole!r}")


class RangeError(RadchainError, ValueError):
    """Requested time outside the validated range of a propagation route."""


class InsufficientDataError(RadchainError, ValueError):
    """Too few usable samples for a fit."""
