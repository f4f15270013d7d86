"""Exact dynamics of the quantum-domino chain in the single-island sector.

The island states |m> (first m spins up) are coupled by nearest-neighbour
hopping of unit strength, so the finite chain is the N-site path graph with
spectrum x_j = 2 cos(j pi / (N+1)) and sine eigenvectors. Everything here is
closed form; dense eigensolvers only appear in the tests as an oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NumericalAccuracyError
from .special_functions import DEFAULT_QUADRATURE, bessel_J_orders, bessel_JN, ipow

__all__ = [
    "IndexConvention",
    "ChainSpec",
    "EigenSystem",
    "eigen_system",
    "green_finite",
    "green_finite_matrix",
    "green_infinite",
    "flip_probability",
]


class IndexConvention(enum.Enum):
    ONE_BASED = "one"    # |m>, m = 1..N
    ZERO_BASED = "zero"  # beta_n, n = 0..N-1


@dataclass(frozen=True)
class ChainSpec:
    N: int
    convention: IndexConvention = IndexConvention.ZERO_BASED

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"chain length must be a positive integer, got {self.N!r}")

    def one_based(self, k: int) -> int:
        """Translate an index in this spec's convention to the 1..N labelling."""
        k1 = k + 1 if self.convention is IndexConvention.ZERO_BASED else k
        if not 1 <= k1 <= self.N:
            lo = 0 if self.convention is IndexConvention.ZERO_BASED else 1
            raise IndexError(f"index {k} outside [{lo}, {lo + self.N - 1}]")
        return k1

    def zero_based(self, k: int) -> int:
        return self.one_based(k) - 1


@dataclass(frozen=True)
class EigenSystem:
    """Spectrum and resolvent weights of the finite chain.

    Weights use zero-based indices:
    ``a_j^(n,m) = -(2/(N+1)) sin((n+1) j pi/(N+1)) sin((m+1) j pi/(N+1))``.
    """

    N: int
    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)  # vectors[n, j-1] = v_j(n)

    def weights(self, n: int, m: int) -> np.ndarray:
        """a_j^(n,m) for j = 1..N as an array."""
        return -self.vectors[n] * self.vectors[m]

    def weight(self, j: int, n: int, m: int) -> float:
        return float(-self.vectors[n, j - 1] * self.vectors[m, j - 1])


@lru_cache(maxsize=64)
def _eigen_system(N: int) -> EigenSystem:
    theta = np.arange(1, N + 1) * np.pi / (N + 1)
    x = 2.0 * np.cos(theta)
    sites = np.arange(1, N + 1)
    vecs = np.sqrt(2.0 / (N + 1)) * np.sin(np.outer(sites, theta))
    x.setflags(write=False)
    vecs.setflags(write=False)
    return EigenSystem(N=N, eigenvalues=x, vectors=vecs)


def eigen_system(spec: ChainSpec) -> EigenSystem:
    return _eigen_system(int(spec.N))


def green_finite(spec: ChainSpec, n: int, m: int, t):
    """<n| exp(-i t H_N) |m> for the finite chain.

    ``(-i)^(n-m) J^(N)_(n-m)(2t) - (-i)^(n+m) J^(N)_(n+m)(2t)`` with one-based
    n, m; indices are taken in ``spec.convention`` and shifted internally.
    """
    n1, m1 = spec.one_based(n), spec.one_based(m)
    xi = 2.0 * np.asarray(t, dtype=float)
    d, s = n1 - m1, n1 + m1
    out = ipow(-d) * bessel_JN(spec.N, d, xi) - ipow(-s) * bessel_JN(spec.N, s, xi)
    return complex(out) if np.ndim(t) == 0 else out


def green_finite_matrix(spec: ChainSpec, t: float) -> np.ndarray:
    """Full N x N propagator matrix at one time, rows/cols in site order."""
    N = spec.N
    theta = np.arange(1, N + 1) * np.pi / (N + 1)
    ks = np.arange(-(N - 1), 2 * N + 1)
    phase = np.exp(-2j * float(t) * np.cos(theta))
    # (-i)^k J^(N)_k(2t) = (1/(N+1)) sum_j exp(-2it cos theta_j) cos(k theta_j)
    table = (np.cos(np.outer(ks, theta)) @ phase) / (N + 1)
    idx = np.arange(1, N + 1)
    diff = idx[:, None] - idx[None, :]
    summ = idx[:, None] + idx[None, :]
    off = N - 1
    return table[diff + off] - table[summ + off]


def green_infinite(n: int, m: int, t, quad=DEFAULT_QUADRATURE):
    """<n| exp(-i t H) |m> on the half-infinite chain (one-based, n, m >= 1)."""
    if n < 1 or m < 1:
        raise IndexError("infinite-chain indices are one-based (n, m >= 1)")
    d, s = n - m, n + m
    vals = bessel_J_orders([d, s], 2.0 * np.asarray(t, dtype=float), quad)
    out = ipow(-d) * vals[0] - ipow(-s) * vals[1]
    return complex(out) if np.ndim(t) == 0 else out


_SERIES_CUTOFF = 1e-4
_PROB_TOL = 1e-9


def _scaled_bessel(m_orders, t, quad):
    """(m/t) J_m(2t) for each m, series-expanded for tiny t."""
    t = np.asarray(t, dtype=float)
    out = np.empty((len(m_orders),) + t.shape)
    small = t < _SERIES_CUTOFF
    if np.any(~small):
        tb = t[~small]
        out[:, ~small] = np.asarray(m_orders)[:, None] / tb * bessel_J_orders(m_orders, 2.0 * tb, quad)
    if np.any(small):
        ts = t[small]
        for i, m in enumerate(m_orders):
            # m * sum_k (-1)^k t^(2k+m-1) / (k! (m+k)!)
            acc = np.zeros_like(ts)
            fact_k, fact_mk = 1.0, float(np.prod(np.arange(1, m + 1)))
            for k in range(4):
                if k:
                    fact_k *= k
                    fact_mk *= m + k
                acc += (-1) ** k * ts ** (2 * k + m - 1) / (fact_k * fact_mk)
            out[i, small] = m * acc
    return out


def flip_probability(j: int, t, quad=DEFAULT_QUADRATURE):
    """Probability that spin j (one-based) is up at time t, starting from |1>.

    ``1 - sum_{m=1}^{j-1} [(m/t) J_m(2t)]^2``; equals 1 for j = 1 at every t.
    """
    if j < 1:
        raise IndexError("site index j is one-based (j >= 1)")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    if j == 1:
        out = np.ones_like(t_arr)
    else:
        terms = _scaled_bessel(list(range(1, j)), t_arr.ravel(), quad)
        out = (1.0 - np.sum(terms**2, axis=0)).reshape(t_arr.shape)
    if np.any(out < -_PROB_TOL) or np.any(out > 1 + _PROB_TOL):
        raise NumericalAccuracyError(
            f"flip probability left [0, 1] beyond {_PROB_TOL}: range [{out.min()}, {out.max()}]"
        )
    out = np.clip(out, 0.0, 1.0)
    return float(out) if t_arr.ndim == 0 else out
