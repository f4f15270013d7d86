"""Invariant and oracle checks grouped by module, with machine-readable results."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from .chain import ChainSpec, IndexConvention, eigen_system, flip_probability, green_finite_matrix
from .field import FieldParams, check_epsilon0, default_grid, rho_mu
from .propagator import amplitudes, build_discretized, fourier_model
from .resolvent import F_matrix, f_sigma_boundary, f_sigma_NN, im_F_boundary
from .special_functions import bessel_J_orders, bessel_JN

__all__ = ["CheckResult", "GROUPS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    group: str
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float

    def as_dict(self) -> dict:
        return {"group": self.group, "name": self.name, "passed": self.passed,
                "value": self.value, "tolerance": self.tolerance, "seconds": round(self.seconds, 3)}


def _series_J(n, x, terms=60):
    """Power series of J_n, accurate for moderate |x|."""
    n = abs(n)
    return sum((-1) ** k * (x / 2) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n))
               for k in range(terms))


# bessel ---------------------------------------------------------------------------


def _bessel_series():
    xs = np.array([0.1, 1.0, 3.7, 8.0])
    orders = [0, 1, 2, 5]
    got = bessel_J_orders(orders, xs)
    ref = np.array([[_series_J(n, x) for x in xs] for n in orders])
    return float(np.abs(got - ref).max()), 1e-12


def _bessel_recurrence():
    xs = np.linspace(0.5, 60.0, 40)
    J = bessel_J_orders(list(range(0, 12)), xs)
    n = np.arange(1, 11)[:, None]
    resid = J[:-2] + J[2:] - 2 * n / xs * J[1:-1]
    return float(np.abs(resid).max()), 1e-12


def _bessel_reflection():
    xs = np.linspace(-20, 20, 41)
    J = bessel_J_orders([-3, 3, -4, 4], xs)
    return float(max(np.abs(J[0] + J[1]).max(), np.abs(J[2] - J[3]).max())), 1e-14


def _bessel_finite_endpoint():
    # J^(N)_n - J_n is the trapezoid endpoint correction up to spectrally small terms
    N, xs = 40, np.linspace(0.0, 10.0, 11)
    worst = 0.0
    for n in range(0, 5):
        exact = bessel_J_orders([n], xs)[0]
        corr = -(1j**n) / (2 * (N + 1)) * (np.exp(-1j * xs) + (-1) ** n * np.exp(1j * xs))
        worst = max(worst, float(np.abs(bessel_JN(N, n, xs) - exact - corr).max()))
    return worst, 1e-12


# chain ----------------------------------------------------------------------------


def _chain_expm():
    worst = 0.0
    for N in (2, 4, 8):
        H = np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
        for t in (0.5, 2.0, 10.0):
            worst = max(worst, float(np.abs(green_finite_matrix(ChainSpec(N), t) - linalg.expm(-1j * t * H)).max()))
    return worst, 1e-12


def _chain_unitarity():
    worst = 0.0
    for N in (3, 7):
        for t in (0.3, 5.0, 40.0):
            U = green_finite_matrix(ChainSpec(N, IndexConvention.ONE_BASED), t)
            worst = max(worst, float(np.abs(U.conj().T @ U - np.eye(N)).max()))
    return worst, 1e-10


def _flip_limits():
    t = np.linspace(0, 30, 61)
    dev = np.abs(flip_probability(1, t) - 1).max()
    p = flip_probability(6, t)
    # only spin 1 is up initially
    dev = max(dev, abs(p[0]), max(0.0, -p.min()), max(0.0, p.max() - 1))
    return float(dev), 1e-12


# field ----------------------------------------------------------------------------


def _field_norm(params):
    g = default_grid(params)
    return abs(g.integrate(g.rho) - 1.0), 1e-8


def _field_norm_quad(params):
    lo = params.threshold
    val = sum(integrate.quad(lambda e: rho_mu(params, e), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
              for a, b in [(lo, lo + 5), (lo + 5, lo + 30), (lo + 30, lo + 200)])
    return abs(val - 1.0), 1e-8


def _field_support(params):
    e = np.linspace(-5, params.threshold, 50)
    return float(np.abs(rho_mu(params, e)).max()), 0.0


def _field_admissible(params):
    rep = check_epsilon0(params)
    return float(not (rep.passes_basic and rep.passes_strong)), 0.0


# resolvent ------------------------------------------------------------------------


def _plemelj_imag(params):
    p = np.linspace(params.threshold - params.eps0 - 1, 6.0, 200)
    return float(np.abs(f_sigma_boundary(params, p).imag + np.pi * rho_mu(params, p + params.eps0)).max()), 1e-10


def _plemelj_limit(params):
    worst = 0.0
    for p in (-2.0, 0.4, 1.9):
        nus = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
        vals = np.array([f_sigma_NN(params, p - 1j * nu) for nu in nus])
        # Richardson on the O(nu) leading error
        r1 = 2 * vals[1:] - vals[:-1]
        r2 = (4 * r1[1:] - r1[:-1]) / 3
        r3 = (8 * r2[1:] - r2[:-1]) / 7
        worst = max(worst, abs(r3[-1] - f_sigma_boundary(params, p)))
    return float(worst), 1e-6


def _resolvent_oracle(params):
    spec = ChainSpec(6)
    H = np.diag(np.ones(5), 1) + np.diag(np.ones(5), -1)
    worst = 0.0
    for xi in (0.37 - 0.2j, -1.1 - 0.05j, 2.6 - 1e-3j):
        A = H - xi * np.eye(6)
        A[5, 5] -= params.v4 * f_sigma_NN(params, xi)
        worst = max(worst, float(np.abs(F_matrix(spec, params, xi) - np.linalg.inv(A)).max()))
    return worst, 1e-10


def _residue_identity():
    es = eigen_system(ChainSpec(6))
    V = es.vectors
    a = -np.einsum("nj,mj->jnm", V, V)
    c = 5
    lhs = a * a[:, c, c][:, None, None]
    rhs = a[:, :, c][:, :, None] * a[:, c, :][:, None, :]
    return float(np.abs(lhs - rhs).max()), 1e-14


def _sum_rule(params):
    spec = ChainSpec(6)
    g = default_grid(params)
    p = np.linspace(params.threshold - params.eps0, g.eps_max - params.eps0, 60001)
    fs = f_sigma_boundary(params, p, g)
    worst = 0.0
    for n in (0, 5):
        im = im_F_boundary(spec, params, n, n, p, g, fsig=fs)
        worst = max(worst, abs(-integrate.trapezoid(im, p) / np.pi - 1.0))
    return float(worst), 1e-4


# propagator -----------------------------------------------------------------------


def _prop_identity(params):
    A = fourier_model(ChainSpec(6), params).amplitudes([0.0])[0]
    return float(np.abs(A - np.eye(6)).max()), 1e-8


def _prop_unitary(params):
    d = build_discretized(ChainSpec(6), params, 1024)
    psi = d.evolve(np.eye(d.matrix.shape[0])[5], [0.0, 17.0, 63.0])
    return float(np.abs(np.sum(np.abs(psi) ** 2, axis=1) - 1).max()), 1e-12


def _prop_routes(params):
    spec = ChainSpec(6)
    t = np.linspace(0, 50, 201)
    A = amplitudes(spec, params, t, "fourier")
    B = amplitudes(spec, params, t, "discretized", K=2048)
    return float(np.abs(A - B).max()), 1e-3


def _prop_hermitian(params):
    fm = fourier_model(ChainSpec(6), params)
    t = np.array([3.3, 27.0])
    A, B = fm.amplitudes(t), fm.amplitudes(-t)
    return float(np.abs(A - np.conj(np.swapaxes(B, 1, 2))).max()), 1e-12


GROUPS = {
    "bessel": [("series", _bessel_series), ("recurrence", _bessel_recurrence),
               ("reflection", _bessel_reflection), ("finite_sum_endpoint", _bessel_finite_endpoint)],
    "chain": [("expm_oracle", _chain_expm), ("unitarity", _chain_unitarity),
              ("flip_limits", _flip_limits)],
    "field": [("grid_normalisation", _field_norm), ("quad_normalisation", _field_norm_quad),
              ("support", _field_support), ("admissible_defaults", _field_admissible)],
    "resolvent": [("plemelj_imag", _plemelj_imag), ("plemelj_limit", _plemelj_limit),
                  ("linear_solve_oracle", _resolvent_oracle), ("residue_identity", _residue_identity),
                  ("sum_rule", _sum_rule)],
    "propagator": [("t0_identity", _prop_identity), ("discretized_unitarity", _prop_unitary),
                   ("hermiticity", _prop_hermitian), ("route_agreement", _prop_routes)],
}


def run_checks(params: FieldParams, only: str | None = None) -> list[CheckResult]:
    if only is not None and only not in GROUPS:
        raise KeyError(f"unknown check group {only!r}; choose from {sorted(GROUPS)}")
    results = []
    for group, checks in GROUPS.items():
        if only is not None and group != only:
            continue
        for name, fn in checks:
            t0 = time.perf_counter()
            nargs = fn.__code__.co_argcount
            value, tol = fn(params) if nargs else fn()
            passed = bool(np.isfinite(value) and value <= tol)
            results.append(CheckResult(group, name, passed, float(value), tol, time.perf_counter() - t0))
    return results
