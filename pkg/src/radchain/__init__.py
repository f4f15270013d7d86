"""Quantum-domino spin chain and its radiating finite-chain extension."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("radchain")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .chain import ChainSpec, IndexConvention, flip_probability, green_finite, green_infinite
from .errors import (
    ConfigError,
    InsufficientDataError,
    NumericalAccuracyError,
    PoleError,
    PreflightError,
    RadchainError,
    RangeError,
    SingularDenominatorError,
)
from .field import FieldParams, check_epsilon0, default_field_params, rho_mu
from .propagator import Route, amplitude_discretized, amplitude_fourier, emission_probability, fit_decay
from .resolvent import F_mn, f_mn, f_sigma_boundary, f_sigma_NN, scan_denominator
from .special_functions import bessel_J, bessel_JN

__all__ = [
    "__version__",
    "ChainSpec", "IndexConvention", "flip_probability", "green_finite", "green_infinite",
    "ConfigError", "InsufficientDataError", "NumericalAccuracyError", "PoleError",
    "PreflightError", "RadchainError", "RangeError", "SingularDenominatorError",
    "FieldParams", "check_epsilon0", "default_field_params", "rho_mu",
    "Route", "amplitude_discretized", "amplitude_fourier", "emission_probability", "fit_decay",
    "F_mn", "f_mn", "f_sigma_boundary", "f_sigma_NN", "scan_denominator",
    "bessel_J", "bessel_JN",
]
