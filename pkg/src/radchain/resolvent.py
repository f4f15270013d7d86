"""Resolvent matrix elements of the radiating chain.

Chain block (free):     f_mn(xi) = sum_j a_j^(n,m) / (xi - x_j)
Continuum self-energy:  f^s(xi)  = -int rho(e) de / (xi + eps0 - e)
Full chain block:       F_mn = f_mn + v^4 f_{m,c} f^s f_{c,n} / (1 - v^4 f_cc f^s),   c = N-1

Off the real axis f^s is integrated directly on a grid graded towards the
near-singularity. On the axis it is split Sokhotski-Plemelj style into
-PV - i pi rho, with the principal value done by singularity subtraction on
the fixed energy grid. The two evaluations share no code beyond rho itself.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec, eigen_system
from .errors import PoleError, PreflightError, SingularDenominatorError
from .field import EnergyGrid, FieldParams, check_epsilon0, default_grid, rho_mu, rho_mu_derivative

__all__ = [
    "SampleKind",
    "SpectralSample",
    "DenominatorScan",
    "PreflightReport",
    "f_mn",
    "f_sigma_NN",
    "f_sigma_boundary",
    "F_mn",
    "F_matrix",
    "im_F_boundary",
    "scan_denominator",
    "default_scan_grid",
    "preflight",
    "sample_spectrum",
    "write_spectral_csv",
]

POLE_BAND = 1e-4
DENOMINATOR_THRESHOLD = 1e-12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_CHUNK = 256


class SampleKind(enum.Enum):
    F_MN = "F_mn"
    F_SMALL_MN = "f_mn"
    F_SIGMA = "f_sigma"


@dataclass(frozen=True)
class SpectralSample:
    """Boundary values of one resolvent quantity over a real frequency grid."""

    p: np.ndarray
    value: np.ndarray
    kind: SampleKind
    label: str = ""

    def check(self, params: FieldParams, tol: float = 1e-10) -> None:
        """Assert the sign structure of f^sigma boundary values."""
        if self.kind is not SampleKind.F_SIGMA:
            return
        s = self.p + params.eps0
        below = s <= params.threshold
        if np.any(np.abs(self.value.imag[below]) > tol) or np.any(self.value.real[below] <= 0):
            raise AssertionError("f_sigma must be real and positive below the continuum")
        expected = -np.pi * rho_mu(params, s[~below])
        if np.any(np.abs(self.value.imag[~below] - expected) > tol):
            raise AssertionError("Im f_sigma differs from -pi rho(p + eps0)")


def _as_complex(xi):
    return np.asarray(xi, dtype=complex)


def _scalar_or_array(out, like):
    return complex(out) if np.ndim(like) == 0 else out


# chain block ------------------------------------------------------------------


def _fmn_terms(spec: ChainSpec, n, m, xi):
    es = eigen_system(spec)
    a = es.weights(spec.zero_based(n), spec.zero_based(m))
    return a, es.eigenvalues, _as_complex(xi)


def f_mn(spec: ChainSpec, n: int, m: int, xi):
    """Free chain resolvent element (beta_n, (H0 - xi)^-1 beta_m).

    ``xi`` may be complex (Im < 0) or real away from the eigenvalues x_j.
    """
    a, x, z = _fmn_terms(spec, n, m, xi)
    diff = z[..., None] - x
    hit = diff == 0
    if np.any(hit):
        raise PoleError(float(np.broadcast_to(x, diff.shape)[hit][0]))
    return _scalar_or_array(np.sum(a / diff, axis=-1), xi)


# continuum self-energy ----------------------------------------------------------


def _graded_breaks(grid: EnergyGrid, centre: float, nu: float):
    """Grid panel edges with extra edges at centre +- nu 2^k."""
    i = np.searchsorted(grid.breaks, centre)
    lo_i, hi_i = max(i - 1, 0), min(i, grid.breaks.size - 1)
    width = grid.breaks[hi_i] - grid.breaks[lo_i] if hi_i > lo_i else grid.breaks[1] - grid.breaks[0]
    extra = [centre]
    step = nu
    while step < 2.0 * width:
        extra += [centre - step, centre + step]
        step *= 2.0
    pts = np.concatenate([grid.breaks, extra])
    pts = pts[(pts >= grid.eps_min) & (pts <= grid.eps_max)]
    return np.unique(pts)


def _panel_rule(breaks):
    left, right = breaks[:-1], breaks[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    return (mid[:, None] + half[:, None] * _GL_X).ravel(), (half[:, None] * _GL_W).ravel()


def f_sigma_NN(params: FieldParams, xi, grid: EnergyGrid | None = None):
    """Continuum element (beta_N(sigma), (H0 - xi)^-1 beta_N(sigma)) for Im xi < 0.

    Direct quadrature of rho(e) / (e - xi - eps0). Real ``xi`` is accepted
    only below the continuum (xi + eps0 <= a b^2), where the integrand is regular.
    """
    grid = grid or default_grid(params)
    z = _as_complex(xi)
    s = z + params.eps0
    flat = s.ravel()
    if np.any((flat.imag > 0) | ((flat.imag == 0) & (flat.real > params.threshold))):
        raise ValueError("f_sigma_NN needs Im xi < 0, or real xi below the continuum")
    out = np.empty(flat.shape, dtype=complex)

    # the fixed grid is adequate once the singularity sits at least one
    # panel width off the axis (or outside the support)
    widths = np.diff(grid.breaks)
    idx = np.clip(np.searchsorted(grid.breaks, flat.real) - 1, 0, widths.size - 1)
    inside = (flat.real > grid.eps_min - widths[0]) & (flat.real < grid.eps_max + widths[-1])
    dist = np.where(inside, -flat.imag, np.inf)
    outside_gap = np.minimum(np.abs(flat.real - grid.eps_min), np.abs(flat.real - grid.eps_max))
    coarse_ok = (dist >= widths[idx]) | (~inside & (outside_gap >= widths[idx]))
    for start in range(0, flat.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        sel = coarse_ok[sl]
        if np.any(sel):
            block = flat[sl][sel]
            vals = (grid.weights * grid.rho) @ (1.0 / (grid.nodes[:, None] - block[None, :]))
            tmp = out[sl]
            tmp[sel] = vals
            out[sl] = tmp
    for k in np.flatnonzero(~coarse_ok):
        sk = flat[k]
        # real points below the continuum only need a modest grading
        nu = -sk.imag if sk.imag < 0 else 1e-3 * widths[idx[k]]
        centre = min(max(sk.real, grid.eps_min), grid.eps_max)
        nodes, weights = _panel_rule(_graded_breaks(grid, centre, nu))
        out[k] = np.dot(weights * rho_mu(params, nodes), 1.0 / (nodes - sk))
    return _scalar_or_array(out.reshape(s.shape), xi)


def f_sigma_boundary(params: FieldParams, p, grid: EnergyGrid | None = None):
    """Boundary value lim_{nu->0+} f^sigma(p - i nu) = -PV(p + eps0) - i pi rho(p + eps0).

    PV(s) = PV int rho(e) / (s - e) de, by subtracting rho(s) and adding the
    exact logarithm ``rho(s) log((s - lo) / (hi - s))``.
    """
    grid = grid or default_grid(params)
    p_arr = np.asarray(p, dtype=float)
    s_all = p_arr.ravel() + params.eps0
    lo, hi = grid.eps_min, grid.eps_max
    wr = grid.weights * grid.rho
    out = np.empty(s_all.shape, dtype=complex)
    for start in range(0, s_all.size, _CHUNK):
        s = s_all[start:start + _CHUNK]
        rho_s = rho_mu(params, s)
        drho_s = rho_mu_derivative(params, s)
        inside = (s > lo) & (s < hi)
        diff = s[:, None] - grid.nodes[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            plain = wr[None, :] / diff
            sub = grid.weights[None, :] * (grid.rho[None, :] - rho_s[:, None]) / diff
        # nodes that coincide with s to rounding: use the derivative limit
        close = np.abs(diff) < 1e-9 * (1.0 + np.abs(s[:, None]))
        if np.any(close):
            sub = np.where(close, -grid.weights[None, :] * drho_s[:, None], sub)
            plain = np.where(close, 0.0, plain)
        pv = np.where(inside, sub.sum(axis=1), plain.sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(inside & (rho_s > 0), rho_s * np.log((s - lo) / (hi - s)), 0.0)
        pv = pv + log_term
        out[start:start + _CHUNK] = -pv - 1j * np.pi * rho_s
    return _scalar_or_array(out.reshape(p_arr.shape), p)


# full chain block -----------------------------------------------------------------


def _self_energy(params, xi, grid):
    z = _as_complex(xi)
    real = z.imag == 0
    out = np.empty(z.shape, dtype=complex)
    if np.any(real):
        out[real] = f_sigma_boundary(params, z.real[real], grid)
    if np.any(~real):
        out[~real] = f_sigma_NN(params, z[~real], grid)
    return out


def F_matrix(spec: ChainSpec, params: FieldParams, xi, fsig=None, grid: EnergyGrid | None = None,
             check: bool = True):
    """All chain-block elements F_nm(xi) at once, shape ``xi.shape + (N, N)``.

    Real ``xi`` means the boundary value from below. ``fsig`` may supply
    precomputed f^sigma values. Within ``POLE_BAND`` of an eigenvalue x_r the
    pole of f is cancelled analytically before evaluation.
    """
    es = eigen_system(spec)
    N = spec.N
    c = N - 1
    z = np.atleast_1d(_as_complex(xi))
    if fsig is None:
        fsig = _self_energy(params, z, grid or default_grid(params))
    u = params.v4 * np.atleast_1d(np.asarray(fsig, dtype=complex))
    V = es.vectors  # V[n, j] = v_j(n); a_j^(n,m) = -V[n,j] V[m,j]
    x = es.eigenvalues

    diff = z[:, None] - x[None, :]
    near = np.argmin(np.abs(diff), axis=1)
    d_near = diff[np.arange(z.size), near]
    band = np.abs(d_near) < POLE_BAND
    out = np.empty((z.size, N, N), dtype=complex)

    far = ~band
    if np.any(far):
        # same arithmetic as f_mn, so v = 0 reproduces it exactly
        a = -V[:, None, :] * V[None, :, :]                      # (n, m, j)
        f = np.sum(a[None] / diff[far][:, None, None, :], axis=-1)
        fc = f[:, :, c]
        den = 1.0 - u[far] * fc[:, c]
        if check and np.any(np.abs(den) < DENOMINATOR_THRESHOLD):
            k = int(np.argmin(np.abs(den)))
            raise SingularDenominatorError(z[far][k], float(abs(den[k])))
        out[far] = f + (u[far] / den)[:, None, None] * fc[:, :, None] * fc[:, None, :]

    for k in np.flatnonzero(band):
        r = near[k]
        d = d_near[k]
        uk = u[k]
        a_r = -np.outer(V[:, r], V[:, r])
        others = np.arange(N) != r
        g = -(V[:, others] / diff[k, others]) @ V[:, others].T
        # residue term a_nm a_cc - a_nc a_cm vanishes identically (rank one)
        one_minus = 1.0 - uk * g[c, c]
        num = (a_r * one_minus - uk * g * a_r[c, c]
               + uk * (np.outer(a_r[:, c], g[c, :]) + np.outer(g[:, c], a_r[c, :]))
               + d * (g * one_minus + uk * np.outer(g[:, c], g[c, :])))
        den = d * one_minus - uk * a_r[c, c]
        if den == 0:
            if uk == 0:
                raise PoleError(float(x[r]))
            raise SingularDenominatorError(z[k], 0.0)
        out[k] = num / den
    return out.reshape(np.shape(xi) + (N, N))


def F_mn(spec: ChainSpec, params: FieldParams, n: int, m: int, p, grid: EnergyGrid | None = None):
    """Full resolvent element F_mn at real p (boundary value) or complex p (Im < 0)."""
    i, j = spec.zero_based(n), spec.zero_based(m)
    out = F_matrix(spec, params, p, grid=grid)[..., i, j]
    return _scalar_or_array(out, p)


def im_F_boundary(spec: ChainSpec, params: FieldParams, n: int, m: int, p,
                  grid: EnergyGrid | None = None, fsig=None):
    """lim Im F_mn(p - i nu) on the real axis.

    ``v^4 f_nc f_mc Im f^s / ((1 - v^4 f_cc Re f^s)^2 + (v^4 f_cc Im f^s)^2)``,
    switching to the pole-cancelled form within ``POLE_BAND`` of an x_j.
    """
    grid = grid or default_grid(params)
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if fsig is None:
        fsig = f_sigma_boundary(params, p_arr, grid)
    fsig = np.atleast_1d(fsig)
    es = eigen_system(spec)
    i, j = spec.zero_based(n), spec.zero_based(m)
    c = spec.N - 1
    x = es.eigenvalues
    out = np.zeros(p_arr.shape)
    active = p_arr + params.eps0 > params.threshold
    band = np.min(np.abs(p_arr[:, None] - x[None, :]), axis=1) < POLE_BAND
    plain = active & ~band
    if np.any(plain):
        inv = 1.0 / (p_arr[plain, None] - x[None, :])
        fi = -(inv * es.vectors[i] * es.vectors[c]).sum(axis=1)
        fj = -(inv * es.vectors[j] * es.vectors[c]).sum(axis=1)
        fcc = -(inv * es.vectors[c] ** 2).sum(axis=1)
        v4 = params.v4
        fs = fsig[plain]
        den = (1.0 - v4 * fcc * fs.real) ** 2 + (v4 * fcc * fs.imag) ** 2
        if np.any(den < DENOMINATOR_THRESHOLD**2):
            k = int(np.argmin(den))
            raise SingularDenominatorError(float(p_arr[plain][k]), float(np.sqrt(den[k])))
        out[plain] = v4 * fi * fj * fs.imag / den
    pole = active & band
    if np.any(pole):
        out[pole] = F_matrix(spec, params, p_arr[pole], fsig=fsig[pole])[:, i, j].imag
    return float(out[0]) if np.ndim(p) == 0 else out.reshape(np.shape(p))


# diagnostics ---------------------------------------------------------------------


@dataclass(frozen=True)
class DenominatorScan:
    """|1 - v^4 f_{N-1,N-1}(p) f^sigma(p)| over a real grid (poles excluded)."""

    p: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    minimum: float = 0.0
    location: float = 0.0
    sign_changes: tuple = ()  # real roots below the continuum (bound states)

    def as_dict(self) -> dict:
        return {"minimum": self.minimum, "location": self.location,
                "sign_changes": list(self.sign_changes), "points": int(self.p.size),
                "p_min": float(self.p[0]), "p_max": float(self.p[-1])}


def default_scan_grid(params: FieldParams, grid: EnergyGrid | None = None,
                      step: float = 1e-3, margin: float = 1.0) -> np.ndarray:
    grid = grid or default_grid(params)
    p_lo = params.threshold - params.eps0 - margin
    p_hi = max(2.0, grid.eps_max - params.eps0) + margin
    return np.arange(p_lo, p_hi + step / 2, step)


def scan_denominator(spec: ChainSpec, params: FieldParams, p_grid=None,
                     grid: EnergyGrid | None = None) -> DenominatorScan:
    grid = grid or default_grid(params)
    p = np.asarray(default_scan_grid(params, grid) if p_grid is None else p_grid, dtype=float)
    es = eigen_system(spec)
    x = es.eigenvalues
    c = spec.N - 1
    keep = np.min(np.abs(p[:, None] - x[None, :]), axis=1) > 0
    p = p[keep]
    if params.v4 == 0:
        vals = np.ones_like(p)
    else:
        fcc = -((es.vectors[c] ** 2)[None, :] / (p[:, None] - x[None, :])).sum(axis=1)
        raw = 1.0 - params.v4 * fcc * f_sigma_boundary(params, p, grid)
        vals = np.abs(raw)
    k = int(np.argmin(vals))
    roots = ()
    if params.v4 != 0:
        below = p + params.eps0 <= params.threshold
        re = raw.real
        # sign changes of the real denominator where it is a real function,
        # skipping those caused by the poles of f_cc
        flips = np.flatnonzero(below[:-1] & below[1:] & (np.sign(re[:-1]) != np.sign(re[1:])))
        roots = tuple(float(0.5 * (p[i] + p[i + 1])) for i in flips
                      if not np.any((x > p[i]) & (x < p[i + 1])))
    return DenominatorScan(p=p, values=vals, minimum=float(vals[k]), location=float(p[k]),
                           sign_changes=roots)


@dataclass(frozen=True)
class PreflightReport:
    admissibility: object
    scan: DenominatorScan
    fsigma_at_poles: tuple
    min_tol: float

    @property
    def ok(self) -> bool:
        return (self.admissibility.passes_basic and self.scan.minimum > self.min_tol
                and not self.scan.sign_changes and min(self.fsigma_at_poles) > 1e-10)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "admissibility": self.admissibility.as_dict(),
                "scan": self.scan.as_dict(), "min_abs_fsigma_at_poles": min(self.fsigma_at_poles),
                "min_tol": self.min_tol}


def preflight(spec: ChainSpec, params: FieldParams, grid: EnergyGrid | None = None,
              p_grid=None, min_tol: float = 1e-6, raise_on_fail: bool = True) -> PreflightReport:
    """Admissibility report, denominator scan and f^sigma(x_j) != 0 check.

    Raises :class:`PreflightError` (with an adjustment hint) unless the level
    shift clears a b^2 + 2, the scanned denominator stays above ``min_tol``
    and no bound state appears below the continuum.
    """
    grid = grid or default_grid(params)
    adm = check_epsilon0(params, grid)
    scan = scan_denominator(spec, params, p_grid, grid)
    fx = np.abs(f_sigma_boundary(params, eigen_system(spec).eigenvalues, grid))
    rep = PreflightReport(admissibility=adm, scan=scan,
                          fsigma_at_poles=tuple(float(v) for v in fx), min_tol=min_tol)
    if raise_on_fail and not rep.ok:
        raise PreflightError(
            f"pre-flight failed: eps0 = {params.eps0:.6g}, basic bound {adm.basic_bound:.6g}, "
            f"strong bound {adm.strong_bound:.6g}; denominator min {scan.minimum:.3e} at "
            f"p = {scan.location:.6g}; bound states at {list(scan.sign_changes)}. "
            f"Hint: raise eps0 above {adm.strong_bound:.6g} or reduce |v|."
        )
    return rep


# sampling / export -------------------------------------------------------------------


def sample_spectrum(spec: ChainSpec, params: FieldParams, n: int, m: int, p,
                    grid: EnergyGrid | None = None) -> list[SpectralSample]:
    """f_mn, f^sigma and F_mn boundary values on a real grid avoiding the x_j."""
    grid = grid or default_grid(params)
    p = np.asarray(p, dtype=float)
    fs = f_sigma_boundary(params, p, grid)
    i, j = spec.zero_based(n), spec.zero_based(m)
    F = F_matrix(spec, params, p, fsig=fs)[:, i, j]
    return [
        SpectralSample(p, _as_complex(f_mn(spec, n, m, p)), SampleKind.F_SMALL_MN, f"f_{i}{j}"),
        SpectralSample(p, fs, SampleKind.F_SIGMA, "f_sigma_NN"),
        SpectralSample(p, F, SampleKind.F_MN, f"F_{i}{j}"),
    ]


def write_spectral_csv(path, samples, header_lines=()) -> None:
    """Long-format CSV with columns p, Re, Im, kind; '#'-prefixed header lines."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "Re", "Im", "kind"])
        for smp in samples:
            for p, val in zip(smp.p, smp.value):
                w.writerow([f"{p:.17g}", f"{val.real:.17g}", f"{val.imag:.17g}", smp.kind.value])
