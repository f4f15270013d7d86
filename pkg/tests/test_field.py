import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from radchain.errors import ConfigError
from radchain.field import (
    FieldParams,
    FormFactorProfile,
    GridSettings,
    build_energy_grid,
    check_epsilon0,
    default_field_params,
    default_grid,
    form_factor,
    rho_mu,
    rho_mu_derivative,
    spectral_cdf,
    tail_mass,
    threshold_moment,
)

# mpmath tanh-sinh reference values at the default profile (a = b = 1, alpha = 0.2, delta = 0.3)
C2_REF = 0.11927384884053724788
THRESHOLD_MOMENT_REF = 0.35359405572951019416
EPS0_REF = 4.2071881114590203883


def test_parameter_validation():
    with pytest.raises(ConfigError):
        FieldParams(b=0.0)
    with pytest.raises(ConfigError):
        FieldParams(a=-1.0)
    with pytest.raises(ConfigError):
        FieldParams(eps0=0.0)
    with pytest.raises(ConfigError):
        FieldParams(v=np.inf)
    with pytest.raises(ConfigError):
        FormFactorProfile(alpha=0.0)
    with pytest.raises(ConfigError):
        GridSettings(nodes=10)


def test_normalisation_constant_against_mpmath():
    mp.mp.dps = 25
    b, al, de = 1, mp.mpf("0.2"), mp.mpf("0.3")
    tot = mp.quad(lambda p: 4 * mp.pi * p**2 * mp.exp(-2 * al * p**2 - 2 * de / (p - b)),
                  [b, b + de, b + 3, b + 10, mp.inf])
    assert float(1 / tot) == pytest.approx(C2_REF, rel=1e-14)
    g = form_factor(FormFactorProfile(), 2.0)
    assert g == pytest.approx(np.sqrt(C2_REF) * np.exp(-0.2 * 4 - 0.3), rel=1e-12)


def test_form_factor_gap_and_smoothness():
    prof = FormFactorProfile()
    p = np.linspace(0, 1.0, 11)
    assert np.all(form_factor(prof, p) == 0.0)
    # all derivatives vanish at the gap edge: g(b + h) / h^k -> 0
    for k in (1, 3, 6):
        assert form_factor(prof, 1.0 + 1e-3) / 1e-3**k < 1e-30
    with pytest.raises(ValueError):
        form_factor(prof, -1.0)


def test_rho_normalised_and_supported(params):
    g = default_grid(params)
    assert abs(g.integrate(g.rho) - 1.0) < 1e-8
    e = np.linspace(-3, params.threshold, 40)
    assert np.all(rho_mu(params, e) == 0.0)
    assert np.all(rho_mu(params, np.linspace(1.05, 80, 500)) > 0)


@pytest.mark.parametrize("eps", [1.05, 1.7, 4.0, 9.5, 25.0])
def test_rho_is_derivative_of_cdf(params, eps):
    # F_mu from the momentum-space definition; its derivative is rho
    h = 1e-4
    deriv = (spectral_cdf(params, eps + h) - spectral_cdf(params, eps - h)) / (2 * h)
    assert deriv == pytest.approx(rho_mu(params, eps), rel=1e-6, abs=1e-12)
    inner = integrate.quad(lambda e: rho_mu(params, e), params.threshold, eps, epsrel=1e-12, limit=200)[0]
    assert spectral_cdf(params, eps) == pytest.approx(inner, rel=1e-9, abs=1e-14)


def test_cdf_and_tail_complement(params):
    for eps in (2.0, 6.0, 15.0):
        assert spectral_cdf(params, eps) + tail_mass(params, eps) == pytest.approx(1.0, abs=1e-10)
    assert spectral_cdf(params, 0.5) == 0.0


def test_rho_derivative_analytic(params):
    e = np.linspace(1.01, 30, 200)
    h = 1e-6
    fd = (rho_mu(params, e + h) - rho_mu(params, e - h)) / (2 * h)
    assert np.allclose(rho_mu_derivative(params, e), fd, rtol=1e-5, atol=1e-10)
    assert rho_mu_derivative(params, 0.5) == 0.0


def test_scaling_with_dispersion():
    # rho for general a is the a = 1 density rescaled: rho_a(eps) = rho_1(eps/a)/a
    p1 = FieldParams(a=1.0, eps0=5.0)
    p2 = FieldParams(a=2.5, eps0=5.0)
    e = np.linspace(2.6, 40, 50)
    assert np.allclose(rho_mu(p2, e), rho_mu(p1, e / 2.5) / 2.5, rtol=1e-13)


@pytest.mark.parametrize("nodes", [512, 2048, 4096])
def test_grid_invariants(params, nodes):
    g = build_energy_grid(params, nodes)
    assert g.node_count == nodes
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] > params.threshold and g.nodes[-1] < g.eps_max
    assert np.all(g.weights > 0)
    assert abs(g.weights.sum() - (g.eps_max - g.eps_min)) < 1e-10
    assert abs(g.integrate(g.rho) - 1.0) < 1e-8
    assert tail_mass(params, g.eps_max) < params.grid.eps_max_tail
    # the core (chain band plus margin) is finer than the tail
    assert g.core_max > params.eps0 + 2
    assert g.max_spacing(params.threshold, g.core_max) < g.max_spacing(g.core_max, g.eps_max)


def test_grid_moments_converge(params):
    grids = [build_energy_grid(params, n) for n in (1024, 2048, 4096)]
    m = [g.integrate(g.nodes * g.rho) for g in grids]
    assert abs(m[0] - m[2]) < 1e-9
    assert abs(m[1] - m[2]) < 1e-11


def test_threshold_moment_and_admissibility(params):
    assert threshold_moment(params) == pytest.approx(THRESHOLD_MOMENT_REF, abs=1e-8)
    assert params.eps0 == pytest.approx(EPS0_REF, abs=1e-8)
    rep = check_epsilon0(params)
    assert rep.passes_basic and rep.passes_strong
    assert rep.basic_bound == 3.0
    assert rep.strong_bound == pytest.approx(EPS0_REF - 0.5, abs=1e-8)
    low = check_epsilon0(params.replace(eps0=params.threshold + 0.1))
    assert not low.passes_basic and not low.passes_strong
    mid = check_epsilon0(params.replace(eps0=3.5))
    assert mid.passes_basic and not mid.passes_strong
    assert set(rep.as_dict()) >= {"eps0", "basic_bound", "strong_bound", "integral"}


def test_default_params_overrides():
    p = default_field_params(v=0.5)
    assert p.v == 0.5 and check_epsilon0(p).passes_strong
    q = default_field_params(eps0=7.0)
    assert q.eps0 == 7.0
