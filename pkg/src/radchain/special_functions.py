"""Bessel functions of the first kind from their Sommerfeld integral, and the
finite trapezoid-type sums that give the exact finite-chain propagators.

    J_n(xi)     = (i^n / pi) int_0^pi exp(-i xi cos a) cos(n a) da
    J_n^(N)(xi) = (i^n / (N+1)) sum_{j=1}^N exp(-i xi cos(j pi/(N+1))) cos(n j pi/(N+1))
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import NumericalAccuracyError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "bessel_J",
    "bessel_J_orders",
    "bessel_JN",
    "ipow",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule for the angular integral.

    ``node_count`` is the number of nodes per panel; the panel count is chosen
    from the oscillation frequency and then doubled until two successive
    results agree to ``tol``.
    """

    node_count: int = 32
    tol: float = 1e-13
    max_doublings: int = 6
    max_order: int = 512
    imag_tol: float = 1e-10

    def __post_init__(self):
        if self.node_count < 16:
            raise ValueError("node_count must be >= 16")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()

_CHUNK = 256


def ipow(k):
    """Exact integer power of the imaginary unit, ``1j**k``."""
    return (1.0 + 0j, 1j, -1.0 + 0j, -1j)[int(k) % 4]


def _gl_rule(node_count, panels):
    x, w = np.polynomial.legendre.leggauss(node_count)
    h = np.pi / panels
    left = np.arange(panels) * h
    nodes = (left[:, None] + 0.5 * h * (x + 1.0)).ravel()
    weights = np.tile(0.5 * h * w, panels)
    return nodes, weights


def _sommerfeld_block(orders, xi, panels, quad):
    alpha, w = _gl_rule(quad.node_count, panels)
    phase = np.exp(-1j * np.outer(xi, np.cos(alpha)))
    kernel = np.cos(np.outer(orders, alpha)) * w
    return kernel @ phase.T / np.pi


def _sommerfeld(orders, xi, quad):
    """Raw integrals (1/pi) int exp(-i xi cos a) cos(n a) da, shape (orders, xi)."""
    out = np.empty((orders.size, xi.size), dtype=complex)
    for start in range(0, xi.size, _CHUNK):
        block = xi[start:start + _CHUNK]
        freq = np.max(np.abs(block), initial=0.0) + orders.max(initial=0)
        panels = max(1, ceil(freq / 8.0))
        coarse = _sommerfeld_block(orders, block, panels, quad)
        for _ in range(quad.max_doublings):
            panels *= 2
            fine = _sommerfeld_block(orders, block, panels, quad)
            delta = np.max(np.abs(fine - coarse), initial=0.0)
            coarse = fine
            if delta < quad.tol:
                break
        else:
            raise NumericalAccuracyError(
                f"Sommerfeld quadrature did not converge: |delta| = {delta:.2e} "
                f"after {quad.max_doublings} doublings (max |xi| = {np.max(np.abs(block)):.4g})"
            )
        out[:, start:start + _CHUNK] = coarse
    return out


def bessel_J_orders(orders, xi, quad: QuadratureSpec = DEFAULT_QUADRATURE):
    """J_n(xi) for several integer orders at once.

    Returns a real array of shape ``(len(orders),) + np.shape(xi)``. The angular
    integrand is shared between orders, which makes this much cheaper than
    repeated :func:`bessel_J` calls.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    if orders.ndim != 1:
        raise ValueError("orders must be one-dimensional")
    if np.any(np.abs(orders) > quad.max_order):
        raise ValueError(f"|n| exceeds the configured max order {quad.max_order}")
    xi_arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi_arr)):
        raise ValueError("xi must be finite")
    flat = xi_arr.ravel()

    # J_{-n} = (-1)^n J_n
    absn = np.abs(orders)
    sign = np.where((orders < 0) & (absn % 2 == 1), -1.0, 1.0)
    uniq, inverse = np.unique(absn, return_inverse=True)
    raw = _sommerfeld(uniq, flat, quad)
    phase = np.array([ipow(n) for n in uniq])[:, None]
    vals = phase * raw
    resid = np.max(np.abs(vals.imag), initial=0.0)
    if resid > quad.imag_tol:
        raise NumericalAccuracyError(
            f"Sommerfeld quadrature left an imaginary residual {resid:.2e}"
        )
    real = vals.real[inverse] * sign[:, None]
    return real.reshape((orders.size,) + xi_arr.shape)


def bessel_J(n: int, xi, quad: QuadratureSpec = DEFAULT_QUADRATURE):
    """Bessel function of the first kind J_n(xi) for integer ``n`` and real ``xi``.

    ``xi`` may be a scalar or an array; a float is returned for scalar input.
    """
    out = bessel_J_orders([n], xi, quad)[0]
    return float(out) if np.ndim(xi) == 0 else out


def bessel_JN(N: int, n: int, xi):
    """Finite integral sum J_n^(N)(xi) (complex, exact finite sum)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    theta = np.arange(1, N + 1) * np.pi / (N + 1)
    xi_arr = np.asarray(xi, dtype=float)
    terms = np.exp(-1j * np.multiply.outer(xi_arr, np.cos(theta))) * np.cos(n * theta)
    out = ipow(n) * terms.sum(axis=-1) / (N + 1)
    return complex(out) if xi_arr.ndim == 0 else out
