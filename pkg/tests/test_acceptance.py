"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured values
(visible without ``-s``). Run standalone with ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

import radchain.propagator as prop
from radchain.chain import ChainSpec, eigen_system, flip_probability, green_finite
from radchain.errors import PreflightError
from radchain.field import default_field_params, default_grid, rho_mu
from radchain.propagator import (
    Route,
    TimeSeries,
    build_discretized,
    chain_population,
    compare_decay_models,
    fit_decay,
    fourier_model,
    ft_density,
)
from radchain.resolvent import (
    F_matrix,
    f_mn,
    f_sigma_boundary,
    f_sigma_NN,
    im_F_boundary,
    preflight,
    scan_denominator,
)

SCAN_MIN_REF = 0.7092133896562179  # regression value of the denominator scan at defaults


def _emit(k, title, ok, detail, capsys=None):
    line = f"[{'PASS' if ok else 'FAIL'}] {k}. {title}: {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)


def _path(N):
    return np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)


# criteria -------------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    times = np.array([0.5, 2.0, 10.0, 50.0])
    err = unit = 0.0
    for N in (2, 4, 8, 16):
        lam, V = np.linalg.eigh(_path(N))
        spec = ChainSpec(N)
        G = np.empty((times.size, N, N), dtype=complex)
        for n in range(N):
            for m in range(N):
                G[:, n, m] = green_finite(spec, n, m, times)
        for k, t in enumerate(times):
            oracle = (V * np.exp(-1j * t * lam)) @ V.T
            err = max(err, np.abs(G[k] - oracle).max())
            unit = max(unit, np.abs(G[k].conj().T @ G[k] - np.eye(N)).max())
    dt = time.perf_counter() - t0
    ok = err < 1e-12 and unit < 1e-10 and dt < 5
    return ok, f"max |G - oracle| = {err:.2e} (<1e-12), unitarity defect {unit:.2e} (<1e-10), {dt:.2f} s (<5 s)"


def criterion_2():
    t0 = time.perf_counter()
    t = np.linspace(50, 500, 2000)
    res = fit_decay(TimeSeries(t, 1.0 - flip_probability(4, t)), 50, 500, "power", n_boot=100)
    dt = time.perf_counter() - t0
    ok = abs(res.parameter - 3.0) <= 0.1 and dt < 10
    return ok, f"exponent {res.parameter:.4f} (3 +- 0.1), 95% CI [{res.ci[0]:.3f}, {res.ci[1]:.3f}], {dt:.2f} s (<10 s)"


def criterion_3(params):
    t0 = time.perf_counter()
    p = np.linspace(params.threshold - params.eps0 - 1.0, 10.0, 200)
    fs = f_sigma_boundary(params, p)
    im_err = np.abs(fs.imag + np.pi * rho_mu(params, p + params.eps0)).max()
    ext_err = 0.0
    nus = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    for pk in np.linspace(params.threshold - params.eps0 + 0.2, 6.0, 8):
        vals = np.array([f_sigma_NN(params, pk - 1j * nu) for nu in nus])
        # Neville extrapolation to nu = 0 (polynomial in nu through the four samples)
        P = vals.copy()
        for lvl in range(1, nus.size):
            P[:-lvl] = (nus[lvl:] * P[:-lvl] - nus[:-lvl] * P[1:nus.size - lvl + 1]) / (nus[lvl:] - nus[:-lvl])
        ext_err = max(ext_err, abs(P[0] - f_sigma_boundary(params, pk)))
    dt = time.perf_counter() - t0
    ok = im_err < 1e-10 and ext_err < 1e-6 and dt < 5
    return ok, (f"max |Im f + pi rho| = {im_err:.2e} (<1e-10), extrapolated nu->0 gap {ext_err:.2e} (<1e-6), "
                f"{dt:.2f} s (<5 s)")


def criterion_4(params):
    spec = ChainSpec(6)
    es = eigen_system(spec)
    c = spec.N - 1
    worst_F, min_a, d = 0.0, np.inf, 1e-9
    for j, xj in enumerate(es.eigenvalues):
        F = F_matrix(spec, params, xj + d - 1e-8j)[c, c]
        worst_F = max(worst_F, abs(d * F))
        min_a = min(min_a, abs(d * f_mn(spec, c, c, xj + d)))
    V = es.vectors
    a = -np.einsum("nj,mj->jnm", V, V)
    resid = np.abs(a * a[:, c, c][:, None, None] - a[:, :, c][:, :, None] * a[:, c, :][:, None, :]).max()
    ok = worst_F < 1e-6 and min_a > 0.01 and resid < 1e-14
    return ok, (f"max |(p-x_j) F_cc| = {worst_F:.2e} (<1e-6), min |(p-x_j) f_cc| = {min_a:.4f} (>0.01), "
                f"residue identity {resid:.1e} (<1e-14)")


def criterion_5(params):
    spec = ChainSpec(6)
    prop._fourier_model.cache_clear()
    prop._discretized.cache_clear()
    t0 = time.perf_counter()
    t = np.linspace(0, 100, 1001)
    A = fourier_model(spec, params).amplitudes(t)
    K = 2048
    B = build_discretized(spec, params, K).amplitudes(t)
    diff = np.abs(A - B).max()
    dt = time.perf_counter() - t0
    ok = diff < 1e-3 and dt < 120
    return ok, f"max |A_fourier - A_discretized| = {diff:.2e} (<1e-3), K = {K}, {dt:.1f} s (<120 s)"


def criterion_6(params):
    spec = ChainSpec(6)
    t0 = time.perf_counter()
    t = np.linspace(20, 240, 2201)
    series = TimeSeries(t, chain_population(spec, params, 0, t, Route.FOURIER).values)
    rows = [compare_decay_models(series, lo, hi, n_boot=100) for lo, hi in ((20, 60), (60, 120), (120, 240))]
    exps = [r["power"]["parameter"] for r in rows]
    dt = time.perf_counter() - t0
    increasing = all(b > a for a, b in zip(exps, exps[1:]))
    exp_better = all(r["exponential_better"] for r in rows)
    ok = increasing and exps[-1] > 6 and exp_better and dt < 300
    rss = ", ".join(f"{r['exponential']['rss']:.2g}<{r['power']['rss']:.2g}" for r in rows)
    return ok, (f"power exponents {exps[0]:.2f} < {exps[1]:.2f} < {exps[2]:.2f} (last >6), "
                f"exp+floor vs power RSS {rss}, {dt:.1f} s (<300 s)")


def criterion_7(params):
    spec = ChainSpec(6)
    scan = scan_denominator(spec, params)
    good = scan.minimum > 0 and abs(scan.minimum - SCAN_MIN_REF) <= 1e-6 * SCAN_MIN_REF
    bad = params.replace(eps0=params.threshold + 0.1)
    rep = preflight(spec, bad, raise_on_fail=False)
    try:
        preflight(spec, bad)
        raised = False
    except PreflightError:
        raised = True
    ok = good and raised and not rep.ok
    return ok, (f"default scan min {scan.minimum:.10f} (ref {SCAN_MIN_REF:.10f}); eps0 = ab^2+0.1: pre-flight "
                f"{'rejected' if raised else 'accepted'}, scan min {rep.scan.minimum:.2e}, "
                f"bound states at {['%.4f' % s for s in rep.scan.sign_changes]}")


def criterion_8(params):
    spec = ChainSpec(6)
    g = default_grid(params)
    mass = g.integrate(g.rho)
    p = np.linspace(params.threshold - params.eps0, g.eps_max - params.eps0, 200001)
    fs = f_sigma_boundary(params, p, g)
    ft_err = im_err = 0.0
    for n in range(6):
        im = im_F_boundary(spec, params, n, n, p, g, fsig=fs)
        im_err = max(im_err, abs(-np.trapezoid(im, p) / np.pi - 1))
    for n in (0, 5):
        ft_err = max(ft_err, abs(np.trapezoid(ft_density(spec, params, n, n, p, g), p) / np.sqrt(2 * np.pi) - 1))
    ok = abs(mass - 1) < 1e-8 and ft_err < 1e-4 and im_err < 1e-4
    return ok, (f"|int rho - 1| = {abs(mass - 1):.1e} (<1e-8), |int ft_density/sqrt(2pi) - 1| = {ft_err:.1e}, "
                f"|-(1/pi) int Im F_nn - 1| = {im_err:.1e} (<1e-4)")


TITLES = {
    1: "Finite-chain Green-function identity",
    2: "Infinite-chain t^-3 law",
    3: "Sokhotski-Plemelj boundary values",
    4: "Pole cancellation",
    5: "Route cross-validation",
    6: "Super-polynomial decay (property substitute)",
    7: "Admissibility scan",
    8: "Normalizations",
}


def _run(k, params=None):
    fn = globals()[f"criterion_{k}"]
    return fn(params) if fn.__code__.co_argcount else fn()


@pytest.mark.parametrize("k", sorted(TITLES))
def test_acceptance(k, params, capsys):
    ok, detail = _run(k, params)
    _emit(k, TITLES[k], ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    p = default_field_params()
    results = []
    for k in sorted(TITLES):
        ok, detail = _run(k, p)
        _emit(k, TITLES[k], ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
