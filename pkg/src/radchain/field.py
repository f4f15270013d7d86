"""Fermion form factor, dispersion and the induced spectral density.

The form factor is radial with a momentum gap below ``b``::

    g(p) = C exp(-alpha p^2) exp(-delta / (p - b))   for p > b, else 0

which is C-infinity (all derivatives vanish at the gap edge) and rapidly
decreasing. With eps(p) = a p^2 the induced energy density is

    rho(eps) = d/d eps  int_{a p^2 < eps} g(p)^2 d^3p = (2 pi / a) sqrt(eps/a) g(sqrt(eps/a))^2

supported on [a b^2, oo) and normalised to unit mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ConfigError

__all__ = [
    "FormFactorProfile",
    "GridSettings",
    "FieldParams",
    "EnergyGrid",
    "AdmissibilityReport",
    "form_factor",
    "rho_mu",
    "rho_mu_derivative",
    "spectral_cdf",
    "tail_mass",
    "build_energy_grid",
    "default_grid",
    "threshold_moment",
    "check_epsilon0",
    "admissible_eps0",
    "default_field_params",
]

_Q = 16  # Gauss-Legendre nodes per panel
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_Q)


@dataclass(frozen=True)
class FormFactorProfile:
    alpha: float = 0.2  # Gaussian falloff rate
    delta: float = 0.3  # width of the smooth gap-edge transition

    def __post_init__(self):
        if not self.alpha > 0 or not self.delta > 0:
            raise ConfigError("form-factor alpha and delta must be positive")


@dataclass(frozen=True)
class GridSettings:
    nodes: int = 2048
    eps_max_tail: float = 1e-12  # allowed spectral mass beyond eps_max

    def __post_init__(self):
        if self.nodes < 64:
            raise ConfigError("grid.nodes must be >= 64")
        if not 0 < self.eps_max_tail < 1:
            raise ConfigError("grid.eps_max_tail must lie in (0, 1)")


@dataclass(frozen=True)
class FieldParams:
    """Continuum parameters: dispersion ``a``, gap ``b``, level shift ``eps0``, coupling ``v``."""

    a: float = 1.0
    b: float = 1.0
    eps0: float = 4.5
    v: float = 1.0
    profile: FormFactorProfile = field(default_factory=FormFactorProfile)
    grid: GridSettings = field(default_factory=GridSettings)

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"a must be > 0, got {self.a}")
        if not self.b > 0:
            raise ConfigError(f"b must be > 0, got {self.b}")
        if not self.eps0 > 0:
            raise ConfigError(f"eps0 must be > 0, got {self.eps0}")
        if not np.isfinite(self.v):
            raise ConfigError("v must be finite")

    @property
    def threshold(self) -> float:
        """Bottom of the continuum on the energy axis, a b^2."""
        return self.a * self.b * self.b

    @property
    def v4(self) -> float:
        return float(self.v) ** 4

    def replace(self, **changes) -> "FieldParams":
        return replace(self, **changes)


def _log_profile_sq(p, b, alpha, delta):
    """log(g(p)^2 / C^2) for p > b."""
    return -2.0 * alpha * p * p - 2.0 * delta / (p - b)


@lru_cache(maxsize=128)
def _norm_sq(b: float, alpha: float, delta: float) -> float:
    """C^2 such that int g^2 4 pi p^2 dp = 1."""
    # split at the gap-edge transition and a few Gaussian lengths
    def f(p):
        return 4.0 * np.pi * p * p * np.exp(_log_profile_sq(p, b, alpha, delta))

    scale = 1.0 / np.sqrt(alpha)
    brk = [b + delta / 4, b + delta, b + scale, b + 4 * scale, b + 10 * scale]
    brk = sorted(x for x in brk if x > b)
    total = 0.0
    lo = b
    for hi in brk:
        total += integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
        lo = hi
    total += integrate.quad(f, lo, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]
    return 1.0 / total


def form_factor(profile: FormFactorProfile, p, b: float = 1.0):
    """Normalised radial form factor g(p); exactly zero for p <= b."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0):
        raise ValueError("momentum magnitude must be non-negative")
    out = np.zeros_like(p_arr)
    mask = p_arr > b
    if np.any(mask):
        c2 = _norm_sq(float(b), profile.alpha, profile.delta)
        pm = p_arr[mask]
        out[mask] = np.sqrt(c2) * np.exp(0.5 * _log_profile_sq(pm, b, profile.alpha, profile.delta))
    return float(out) if p_arr.ndim == 0 else out


def rho_mu(params: FieldParams, eps):
    """Spectral density of the emitted-fermion state on the energy axis."""
    e = np.asarray(eps, dtype=float)
    out = np.zeros_like(e)
    mask = e > params.threshold
    if np.any(mask):
        a, b, prof = params.a, params.b, params.profile
        p = np.sqrt(e[mask] / a)
        c2 = _norm_sq(float(b), prof.alpha, prof.delta)
        out[mask] = (2.0 * np.pi / a) * p * c2 * np.exp(_log_profile_sq(p, b, prof.alpha, prof.delta))
    return float(out) if e.ndim == 0 else out


def rho_mu_derivative(params: FieldParams, eps):
    """d rho / d eps, analytic."""
    e = np.asarray(eps, dtype=float)
    out = np.zeros_like(e)
    mask = e > params.threshold
    if np.any(mask):
        a, b, prof = params.a, params.b, params.profile
        em = e[mask]
        p = np.sqrt(em / a)
        # d/d eps of log rho = 1/(2 eps) + (d/dp log g^2) / (2 a p)
        dlog_dp = -4.0 * prof.alpha * p + 2.0 * prof.delta / (p - b) ** 2
        out[mask] = rho_mu(params, em) * (0.5 / em + dlog_dp / (2.0 * a * p))
    return float(out) if e.ndim == 0 else out


def spectral_cdf(params: FieldParams, eps: float) -> float:
    """F_mu(eps) = int_{a p^2 < eps} g(p)^2 d^3p, integrated in momentum space."""
    if eps <= params.threshold:
        return 0.0
    prof = params.profile
    pmax = np.sqrt(eps / params.a)
    val = integrate.quad(
        lambda p: 4.0 * np.pi * p * p * form_factor(prof, p, params.b) ** 2,
        params.b, pmax, epsabs=0, epsrel=1e-13, limit=200,
    )[0]
    return float(val)


def tail_mass(params: FieldParams, eps: float) -> float:
    """Spectral mass above ``eps``."""
    lo = max(eps, params.threshold)
    return float(integrate.quad(lambda e: rho_mu(params, e), lo, np.inf,
                                epsabs=1e-18, epsrel=1e-10, limit=200)[0])


@dataclass(frozen=True)
class EnergyGrid:
    """Gauss-Legendre panels on [a b^2, eps_max] for integrals against rho_mu.

    ``breaks`` are the panel edges; panels are dense over the core window
    ``[a b^2, core_max]`` that holds the chain band and coarse beyond it.
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    breaks: np.ndarray = field(repr=False)
    eps_min: float = 0.0
    eps_max: float = 0.0
    core_max: float = 0.0

    @property
    def node_count(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def max_spacing(self, lo: float = -np.inf, hi: float = np.inf) -> float:
        """Largest gap between neighbouring nodes inside [lo, hi]."""
        x = self.nodes[(self.nodes >= lo) & (self.nodes <= hi)]
        if x.size < 2:
            return float(self.eps_max - self.eps_min)
        return float(np.max(np.diff(x)))


def _find_eps_max(params: FieldParams, tail_tol: float, max_span: float = 1e4):
    lo = params.threshold
    # bracket by doubling the span, then bisect on the tail-mass criterion
    dense = np.linspace(lo, lo + 50.0 / params.profile.alpha, 4001)
    peak = float(np.max(rho_mu(params, dense)))

    def ok(e):
        return tail_mass(params, e) < tail_tol and rho_mu(params, e) < 1e-14 * peak

    span = 1.0
    while not ok(lo + span):
        span *= 2.0
        if span > max_span:
            raise ConfigError(
                f"tail mass < {tail_tol:g} not reached within eps <= {lo + max_span:g}"
            )
    a, b = lo + span / 2.0, lo + span
    for _ in range(40):
        mid = 0.5 * (a + b)
        if ok(mid):
            b = mid
        else:
            a = mid
    return b, peak


def _panels(breaks):
    left, right = breaks[:-1], breaks[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    nodes = (mid[:, None] + half[:, None] * _GL_X).ravel()
    weights = (half[:, None] * _GL_W).ravel()
    return nodes, weights


def _core_edge(params: FieldParams, start: float, stop: float, tol: float) -> float:
    """First eps >= start where the chain-visible tail weight drops below tol.

    Modes beyond the core are coarse; the share of the chain's spectral weight
    they carry is about v^4 * tail_mass(eps) / (eps - eps0 - 2)^2.
    """
    def visible(e):
        gap = max(e - params.eps0 - 2.0, 1.0)
        return params.v4 * tail_mass(params, e) / gap**2

    e = start
    while e < stop and visible(e) >= tol:
        e += 1.0
    return min(e, stop)


def build_energy_grid(params: FieldParams, node_count: int | None = None,
                      core_fraction: float = 0.8, core_pad: float = 3.0,
                      core_tol: float = 1e-7) -> EnergyGrid:
    """Quadrature grid on the continuum energy axis.

    ``node_count`` is rounded down to a multiple of 16. Roughly
    ``core_fraction`` of the panels cover the core [a b^2, core_max], which
    holds the chain band (plus ``core_pad``) and extends until the coarse
    remainder carries chain-visible weight below ``core_tol``. The rest are
    spread evenly up to ``eps_max``, chosen so that the spectral mass beyond
    it is below ``params.grid.eps_max_tail``.
    """
    if node_count is None:
        node_count = params.grid.nodes
    if node_count < 64:
        raise ConfigError("node_count must be >= 64")
    eps_max, _ = _find_eps_max(params, params.grid.eps_max_tail)
    lo = params.threshold
    core_max = _core_edge(params, max(params.eps0 + 2.0 + core_pad, lo + 1.0), eps_max, core_tol)
    n_panels = node_count // _Q
    if core_max >= eps_max:
        breaks = np.linspace(lo, eps_max, n_panels + 1)
    else:
        n_core = max(1, int(round(core_fraction * n_panels)))
        n_tail = max(1, n_panels - n_core)
        n_core = n_panels - n_tail
        breaks = np.concatenate([
            np.linspace(lo, core_max, n_core + 1),
            np.linspace(core_max, eps_max, n_tail + 1)[1:],
        ])
    nodes, weights = _panels(breaks)
    rho = rho_mu(params, nodes)
    for arr in (nodes, weights, rho, breaks):
        arr.setflags(write=False)
    return EnergyGrid(nodes=nodes, weights=weights, rho=rho, breaks=breaks,
                      eps_min=lo, eps_max=float(eps_max), core_max=float(core_max))


@lru_cache(maxsize=32)
def _default_grid_cached(params: FieldParams) -> EnergyGrid:
    return build_energy_grid(params)


def default_grid(params: FieldParams) -> EnergyGrid:
    """Grid built from ``params.grid`` settings, cached per parameter set."""
    return _default_grid_cached(params)


@dataclass(frozen=True)
class AdmissibilityReport:
    eps0: float
    basic_bound: float        # a b^2 + 2
    strong_bound: float       # 2 + a b^2 + 2 v^4 int rho/(eps - a b^2)
    integral: float           # int rho(eps) / (eps - a b^2) d eps
    passes_basic: bool
    passes_strong: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def threshold_moment(params: FieldParams, grid: EnergyGrid | None = None) -> float:
    """int rho(eps) / (eps - a b^2) d eps (finite: rho is flat at the threshold)."""
    grid = grid or default_grid(params)
    return grid.integrate(grid.rho / (grid.nodes - params.threshold))


def check_epsilon0(params: FieldParams, grid: EnergyGrid | None = None) -> AdmissibilityReport:
    integral = threshold_moment(params, grid)
    basic = params.threshold + 2.0
    strong = basic + 2.0 * params.v4 * integral
    return AdmissibilityReport(
        eps0=params.eps0, basic_bound=basic, strong_bound=strong, integral=integral,
        passes_basic=params.eps0 > basic, passes_strong=params.eps0 > strong,
    )


def admissible_eps0(params: FieldParams, margin: float = 0.5) -> float:
    """Strong-bound level shift plus ``margin``; the moment does not depend on eps0."""
    # eps0 only moves the dense-core window of the grid, not rho
    return check_epsilon0(params).strong_bound + margin


def default_field_params(**overrides) -> FieldParams:
    """Desk-scale defaults: a = b = 1, v = 1, alpha = 0.2, delta = 0.3,
    eps0 = strong admissibility bound + 0.5."""
    base = FieldParams(**overrides)
    if "eps0" in overrides:
        return base
    return base.replace(eps0=admissible_eps0(base))
