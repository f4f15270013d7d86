"""Time evolution of the radiating chain.

Two independent routes to ``A_nm(t) = (beta_m, exp(itH) beta_n)``:

* Fourier: ``-(1/pi) int exp(ipt) Im F_mn(p) dp`` over the boundary values of
  the resolvent, integrated panel-wise with a Filon-Legendre rule so that large
  t costs nothing extra.
* Discretized: the continuum replaced by K quadrature modes, the resulting
  (N+K)-dimensional Hamiltonian diagonalised once. Exact until the
  recurrence time ``2 pi / (mode spacing)``.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import spherical_jn

from .chain import ChainSpec, eigen_system, green_finite_matrix
from .errors import InsufficientDataError, NumericalAccuracyError, RangeError
from .field import EnergyGrid, FieldParams, build_energy_grid, default_grid, rho_mu
from .resolvent import F_matrix, f_sigma_boundary, preflight

__all__ = [
    "Route",
    "TimeSeries",
    "FourierModel",
    "DiscretizedH1",
    "FitResult",
    "ft_density",
    "fourier_model",
    "amplitude_fourier",
    "build_discretized",
    "amplitude_discretized",
    "recurrence_time",
    "choose_mode_count",
    "amplitudes",
    "chain_population",
    "emission_probability",
    "golden_rule_rates",
    "fit_decay",
    "compare_decay_models",
]

T_MAX_DEFAULT = 500.0
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


class Route(enum.Enum):
    FOURIER = "fourier"
    DISCRETIZED = "discretized"


@dataclass
class TimeSeries:
    """Samples of a real or complex quantity on a time grid."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""
    route: Route | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same shape")

    def to_csv(self, path, header_lines=()) -> None:
        cplx = np.iscomplexobj(self.values)
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "re", "im"] if cplx else ["t", self.label or "value"])
            for t, y in zip(self.times, self.values):
                if cplx:
                    w.writerow([f"{t:.17g}", f"{y.real:.17g}", f"{y.imag:.17g}"])
                else:
                    w.writerow([f"{t:.17g}", f"{float(y):.17g}"])


def _check_times(t, t_max):
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~np.isfinite(t_arr)) or np.any(np.abs(t_arr) > t_max):
        raise RangeError(f"|t| must not exceed t_max = {t_max}")
    return t_arr


def golden_rule_rates(spec: ChainSpec, params: FieldParams) -> np.ndarray:
    """Weak-coupling widths 2 pi v^4 |a_l^(c,c)| rho(x_l + eps0) of the chain modes."""
    es = eigen_system(spec)
    c = spec.N - 1
    return 2 * np.pi * params.v4 * es.vectors[c] ** 2 * rho_mu(params, es.eigenvalues + params.eps0)


# Fourier route ----------------------------------------------------------------------


def ft_density(spec: ChainSpec, params: FieldParams, n: int, m: int, p,
               grid: EnergyGrid | None = None):
    """Fourier density -sqrt(2/pi) Im F_mn(p); the amplitude is its inverse transform."""
    from .resolvent import im_F_boundary

    return -_SQRT_2_OVER_PI * im_F_boundary(spec, params, n, m, p, grid)


def _panel_edges(lo, hi, h):
    n = max(1, int(np.ceil((hi - lo) / h)))
    return np.linspace(lo, hi, n + 1)


def _resonance_scales(spec, params, grid):
    """Golden-rule width and a generous bound on the level shift of each mode."""
    c = spec.N - 1
    es = eigen_system(spec)
    widths = golden_rule_rates(spec, params)
    fs = np.abs(f_sigma_boundary(params, es.eigenvalues, grid))
    shifts = params.v4 * es.vectors[c] ** 2 * fs
    return widths, 3.0 * widths + 2.0 * shifts


def _resonance_edges(centre, width, reach, h_fine):
    """Panels of width/4 over centre +- reach, then doubling out to h_fine."""
    h = 0.25 * width
    if not h > 0 or h >= h_fine:
        return np.empty(0)
    inner = np.arange(-reach, reach + h, h)
    outer = []
    edge, step = reach, h
    while step < h_fine:
        step *= 2.0
        edge += step
        outer.append(edge)
    outer = np.asarray(outer)
    return centre + np.concatenate([inner, outer, -outer])


@dataclass(frozen=True)
class FourierModel:
    """Legendre coefficients of -(1/pi) Im F on frequency panels, all chain pairs."""

    spec: ChainSpec
    params: FieldParams
    centres: np.ndarray = field(repr=False)
    halfwidths: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)  # (panel, degree, N, N)
    order: int = 16
    t_max: float = T_MAX_DEFAULT
    sum_rule_error: float = 0.0

    def amplitudes(self, t) -> np.ndarray:
        """A[t, n, m] = (beta_m, exp(itH) beta_n) for zero-based n, m."""
        t_arr = _check_times(t, self.t_max)
        N = self.spec.N
        out = np.zeros((t_arr.size, N, N), dtype=complex)
        k = np.arange(self.order)
        ik = (1j) ** k
        for h in np.unique(self.halfwidths):
            sel = self.halfwidths == h
            # int_{-1}^{1} P_k(x) exp(i w x) dx = 2 i^k j_k(w)
            moments = 2.0 * ik[None, :] * spherical_jn(k[None, :], np.abs(t_arr[:, None]) * h)
            moments = np.where(t_arr[:, None] < 0, np.conj(moments), moments)
            phase = np.exp(1j * np.outer(t_arr, self.centres[sel]))
            tmp = np.einsum("tp,pknm->tknm", phase, self.coeffs[sel])
            out += h * np.einsum("tk,tknm->tnm", moments, tmp)
        return out


@lru_cache(maxsize=8)
def _fourier_model(spec, params, node_count, h_fine, h_coarse, order, t_max):
    grid = default_grid(params) if node_count is None else build_energy_grid(params, node_count)
    preflight(spec, params, grid)
    p0 = params.threshold - params.eps0
    p_hi = grid.eps_max - params.eps0
    if params.v == 0:
        raise ValueError("uncoupled chain has no continuous spectrum; use the closed form")
    x = eigen_system(spec).eigenvalues
    split = min(max(float(x.max()) + 1.0, p0 + 1.0), p_hi)
    parts = [_panel_edges(p0, split, h_fine), _panel_edges(split, p_hi, h_coarse)]
    parts += [_resonance_edges(xl, gl, reach, h_fine)
              for xl, gl, reach in zip(x, *_resonance_scales(spec, params, grid))]
    edges = np.concatenate(parts)
    edges = np.unique(edges[(edges >= p0) & (edges <= p_hi)])
    gx, gw = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx).ravel()
    fs = f_sigma_boundary(params, nodes, grid)
    dens = -F_matrix(spec, params, nodes, fsig=fs).imag / np.pi  # (P*q, N, N)
    dens = dens.reshape(mid.size, order, spec.N, spec.N)
    # Legendre coefficients c_k = (2k+1)/2 sum_i w_i P_k(x_i) f(x_i)
    leg = np.polynomial.legendre.legvander(gx, order - 1)  # (q, k)
    proj = (leg * gw[:, None]).T * ((2 * np.arange(order) + 1) / 2.0)[:, None]
    coeffs = np.einsum("ki,pinm->pknm", proj, dens)
    # t = 0 must reproduce the identity (spectral weights sum to one)
    total = np.einsum("p,pnm->nm", 2.0 * half, coeffs[:, 0])
    err = float(np.abs(total - np.eye(spec.N)).max())
    if err > 1e-8:
        raise NumericalAccuracyError(f"spectral sum rule violated by {err:.3e}")
    halfw = np.round(half, 14)
    return FourierModel(spec=spec, params=params, centres=mid, halfwidths=halfw, coeffs=coeffs,
                        order=order, t_max=t_max, sum_rule_error=err)


def fourier_model(spec: ChainSpec, params: FieldParams, node_count: int | None = None,
                  h_fine: float = 0.01, h_coarse: float = 0.25, order: int = 16,
                  t_max: float = T_MAX_DEFAULT) -> FourierModel:
    """Build (and cache) the Fourier-route model; runs the pre-flight checks."""
    return _fourier_model(spec, params, node_count, h_fine, h_coarse, order, t_max)


def amplitude_fourier(spec: ChainSpec, params: FieldParams, n: int, m: int, t, **kw):
    """(beta_m, exp(itH) beta_n) by Fourier inversion of the spectral density."""
    i, j = spec.zero_based(n), spec.zero_based(m)
    out = fourier_model(spec, params, **kw).amplitudes(t)[:, i, j]
    return complex(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


# discretized route ------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretizedH1:
    """Chain plus K continuum modes; eigen-decomposition of the full Hamiltonian.

    Basis order: chain sites 0..N-1, then modes with energies e_k - eps0 coupled
    to site N-1 by v^2 sqrt(w_k rho_k).
    """

    N: int
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    t_rec: float = np.inf

    @property
    def mode_count(self) -> int:
        return self.matrix.shape[0] - self.N

    def evolve(self, state, t) -> np.ndarray:
        """exp(itH) applied to ``state`` at each time; shape (T, N+K)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        coef = self.eigenvectors.T @ np.asarray(state, dtype=complex)
        return (np.exp(1j * np.outer(t_arr, self.eigenvalues)) * coef) @ self.eigenvectors.T

    def amplitudes(self, t) -> np.ndarray:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        V = self.eigenvectors[: self.N]
        ph = np.exp(1j * np.outer(t_arr, self.eigenvalues))
        return np.einsum("nl,tl,ml->tnm", V, ph, V)


def recurrence_time(grid: EnergyGrid, params: FieldParams) -> float:
    """2 pi over the largest mode spacing where the chain couples (the core)."""
    return 2 * np.pi / grid.max_spacing(params.threshold, grid.core_max)


def choose_mode_count(params: FieldParams, t_max: float, safety: float = 2.0,
                      minimum: int | None = None, maximum: int = 8192) -> int:
    """Smallest mode count (multiple of 256) with recurrence time >= safety * t_max."""
    base = build_energy_grid(params, 1024)
    rec = recurrence_time(base, params)
    need = int(np.ceil(1024 * safety * t_max / rec / 256.0)) * 256
    k = max(need, minimum if minimum is not None else params.grid.nodes)
    if k > maximum:
        raise RangeError(f"t_max = {t_max} needs {k} continuum modes (> {maximum})")
    return k


def _assemble(spec: ChainSpec, params: FieldParams, grid: EnergyGrid) -> DiscretizedH1:
    N = spec.N
    H = np.zeros((N + grid.node_count,) * 2)
    idx = np.arange(N - 1)
    H[idx, idx + 1] = H[idx + 1, idx] = 1.0
    modes = np.arange(N, N + grid.node_count)
    H[modes, modes] = grid.nodes - params.eps0
    g = params.v**2 * np.sqrt(grid.weights * grid.rho)
    H[N - 1, modes] = H[modes, N - 1] = g
    if not np.all(np.isfinite(H)):
        raise NumericalAccuracyError("non-finite entries in the discretized Hamiltonian")
    lam, vec = np.linalg.eigh(H)
    for a in (H, lam, vec):
        a.setflags(write=False)
    return DiscretizedH1(N=N, matrix=H, eigenvalues=lam, eigenvectors=vec,
                         t_rec=recurrence_time(grid, params))


@lru_cache(maxsize=4)
def _discretized(spec: ChainSpec, params: FieldParams, K: int) -> DiscretizedH1:
    return _assemble(spec, params, build_energy_grid(params, K))


def build_discretized(spec: ChainSpec, params: FieldParams,
                      grid: EnergyGrid | int | None = None) -> DiscretizedH1:
    """Chain plus K continuum modes, diagonalized once.

    ``grid`` is either a prebuilt EnergyGrid or a mode count K (default
    ``params.grid.nodes``); models built from a mode count are cached.
    """
    if isinstance(grid, EnergyGrid):
        return _assemble(spec, params, grid)
    return _discretized(spec, params, int(grid or params.grid.nodes))


def amplitude_discretized(model: DiscretizedH1, n: int, m: int, t, spec: ChainSpec | None = None):
    """(beta_m, exp(itH) beta_n) from the discretized Hamiltonian."""
    spec = spec or ChainSpec(model.N)
    i, j = spec.zero_based(n), spec.zero_based(m)
    V = model.eigenvectors
    ph = np.exp(1j * np.outer(np.atleast_1d(np.asarray(t, dtype=float)), model.eigenvalues))
    out = ph @ (V[i] * V[j])
    return complex(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


# observables -------------------------------------------------------------------------


def amplitudes(spec: ChainSpec, params: FieldParams, t, route: Route = Route.FOURIER,
               K: int | None = None, t_max: float = T_MAX_DEFAULT) -> np.ndarray:
    """All chain amplitudes A[t, n, m] by the chosen route."""
    route = Route(route)
    t_arr = _check_times(t, t_max)
    if route is Route.FOURIER:
        if params.v == 0:
            # decoupled chain: exp(itH) is the conjugate of the closed-form propagator
            return np.stack([np.conj(green_finite_matrix(spec, tk)) for tk in t_arr])
        return fourier_model(spec, params, t_max=t_max).amplitudes(t_arr)
    if K is None:
        K = choose_mode_count(params, float(np.abs(t_arr).max()))
    model = build_discretized(spec, params, K)
    if np.abs(t_arr).max() > model.t_rec / 2:
        raise RangeError(f"t exceeds half the recurrence time {model.t_rec:.4g} for K = {K}")
    return model.amplitudes(t_arr)


def chain_population(spec: ChainSpec, params: FieldParams, m: int, t,
                     route: Route = Route.FOURIER, **kw) -> TimeSeries:
    """Probability sum_n |A_nm(t)|^2 of still finding the excitation on the chain."""
    j = spec.zero_based(m)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    A = amplitudes(spec, params, t_arr, route, **kw)
    pop = np.sum(np.abs(A[:, :, j]) ** 2, axis=1)
    return TimeSeries(t_arr, pop, label="population", route=Route(route), meta={"m": j})


def emission_probability(spec: ChainSpec, params: FieldParams, m: int, t,
                         route: Route = Route.FOURIER, **kw) -> TimeSeries:
    """P(t) = 1 - sum_n |(beta_n, exp(itH) beta_m)|^2: excitation has left the chain."""
    pop = chain_population(spec, params, m, t, route, **kw)
    if params.v == 0:
        # nothing couples the chain to the field
        return TimeSeries(pop.times, np.zeros_like(pop.values), label="emission",
                          route=pop.route, meta=pop.meta)
    if np.any(pop.values > 1 + 1e-8):
        raise NumericalAccuracyError(f"chain population exceeds 1 by {pop.values.max() - 1:.3e}")
    return TimeSeries(pop.times, np.clip(1.0 - pop.values, 0.0, 1.0), label="emission",
                      route=pop.route, meta=pop.meta)


# decay fits --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """``y ~ A t^-exponent`` (power) or ``y ~ A exp(-rate t) + floor`` (exponential)."""

    model: str
    parameter: float           # exponent or rate
    prefactor: float
    ci: tuple                  # bootstrap interval for ``parameter``
    rss: float                 # residual sum of squares in log y
    n_points: int
    floor_value: float = 0.0

    def as_dict(self) -> dict:
        return {"model": self.model, "parameter": self.parameter, "prefactor": self.prefactor,
                "ci": list(self.ci), "rss": self.rss, "n_points": self.n_points,
                "floor_value": self.floor_value}


def _window(series: TimeSeries, t1, t2, floor):
    t = series.times
    y = np.real(series.values).astype(float)
    sel = (t >= t1) & (t <= t2) & (y > floor) & (t > 0)
    if sel.sum() < 8:
        raise InsufficientDataError(f"only {int(sel.sum())} usable points in [{t1}, {t2}] above {floor}")
    return t[sel], y[sel]


def _power_fit(t, y):
    X = np.log(t)
    slope, icpt = np.polyfit(X, np.log(y), 1)
    resid = np.log(y) - (slope * X + icpt)
    return -slope, np.exp(icpt), float(resid @ resid)


def _exp_floor_fit(t, y, floor):
    ly = np.log(y)
    rate0, l0 = np.polyfit(t, ly, 1)

    def resid(q):
        la, rate, lc = q
        return np.logaddexp(la - rate * t, lc) - ly

    lc0 = np.log(max(floor, y.min() * 1e-3))
    res = optimize.least_squares(resid, [l0, -rate0, lc0], method="trf",
                                 bounds=([-np.inf, -np.inf, np.log(floor) - 50], np.inf),
                                 x_scale="jac")
    la, rate, lc = res.x
    r = res.fun
    return float(rate), float(np.exp(la)), float(r @ r), float(np.exp(lc))


def fit_decay(series: TimeSeries, t1: float, t2: float, model: str = "power",
              floor: float = 1e-12, n_boot: int = 200, seed: int = 0, level: float = 0.95) -> FitResult:
    """Least-squares fit of log y over [t1, t2]; points at or below ``floor`` are dropped.

    The confidence interval comes from a seeded bootstrap over the window points.
    """
    t, y = _window(series, t1, t2, floor)
    if model == "power":
        def fit(tt, yy):
            return _power_fit(tt, yy)
    elif model == "exponential":
        def fit(tt, yy):
            return _exp_floor_fit(tt, yy, floor)
    else:
        raise ValueError(f"unknown model {model!r}")
    best = fit(t, y)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        idx = np.sort(rng.integers(0, t.size, t.size))
        if np.unique(t[idx]).size < 3:
            continue
        boots.append(fit(t[idx], y[idx])[0])
    q = (1 - level) / 2
    ci = (float(np.quantile(boots, q)), float(np.quantile(boots, 1 - q))) if boots else (np.nan, np.nan)
    floor_value = best[3] if model == "exponential" else 0.0
    return FitResult(model=model, parameter=float(best[0]), prefactor=float(best[1]), ci=ci,
                     rss=float(best[2]), n_points=int(t.size), floor_value=floor_value)


def compare_decay_models(series: TimeSeries, t1: float, t2: float, floor: float = 1e-12,
                         seed: int = 0, n_boot: int = 200) -> dict:
    """Best power law versus single exponential plus floor on one window."""
    pw = fit_decay(series, t1, t2, "power", floor, n_boot, seed)
    ex = fit_decay(series, t1, t2, "exponential", floor, n_boot, seed)
    return {"window": [t1, t2], "power": pw.as_dict(), "exponential": ex.as_dict(),
            "exponential_better": ex.rss < pw.rss}
