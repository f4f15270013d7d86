import numpy as np
import pytest
from scipy.special import jv

from radchain.errors import NumericalAccuracyError
from radchain.special_functions import (
    QuadratureSpec,
    bessel_J,
    bessel_J_orders,
    bessel_JN,
    ipow,
)

# 30-digit reference values (mpmath besselj)
REFERENCE = [
    (0, 0.5, 0.93846980724081290423),
    (3, 2.0, 0.1289432494744020511),
    (7, 25.5, -0.083249221475469142114),
    (10, 100.0, -0.054732176935472014742),
    (1, -3.3, -0.22066345298524115574),
    (2, 1000.0, -0.024777229528605995513),
]


@pytest.mark.parametrize("n, x, ref", REFERENCE)
def test_reference_values(n, x, ref):
    assert abs(bessel_J(n, x) - ref) < 1e-13


def test_matches_scipy_over_range():
    x = np.linspace(-30, 400, 1201)
    orders = [0, 1, 2, 5, 9]
    got = bessel_J_orders(orders, x)
    assert np.abs(got - jv(np.array(orders)[:, None], x)).max() < 1e-12


def test_zero_argument():
    assert bessel_J(0, 0.0) == pytest.approx(1.0, abs=1e-15)
    for n in (1, 2, -3):
        assert abs(bessel_J(n, 0.0)) < 1e-15


def test_negative_order_reflection():
    x = np.linspace(0.1, 20, 50)
    for n in range(1, 6):
        assert np.allclose(bessel_J(-n, x), (-1) ** n * bessel_J(n, x), atol=1e-15, rtol=0)


def test_three_term_recurrence():
    x = np.linspace(0.5, 80, 60)
    J = bessel_J_orders(list(range(13)), x)
    n = np.arange(1, 12)[:, None]
    assert np.abs(J[:-2] + J[2:] - 2 * n / x * J[1:-1]).max() < 1e-12


def test_large_argument_decay():
    x = np.linspace(200, 1000, 400)
    J = bessel_J_orders([0, 3], x)
    assert np.all(np.abs(J) <= np.sqrt(2 / (np.pi * x)) * 1.05)


def test_scalar_and_array_shapes():
    assert isinstance(bessel_J(2, 1.0), float)
    assert bessel_J(2, np.ones((3, 4))).shape == (3, 4)
    assert bessel_J_orders([0, 1], np.ones(5)).shape == (2, 5)


def test_ipow_exact():
    assert [ipow(k) for k in range(-4, 5)] == [1, 1j, -1, -1j, 1, 1j, -1, -1j, 1]


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(node_count=8)


def test_nonconvergence_raises():
    spec = QuadratureSpec(node_count=16, tol=1e-30, max_doublings=1)
    with pytest.raises(NumericalAccuracyError):
        bessel_J(3, 50.0, spec)


# finite sums -----------------------------------------------------------------


def _endpoint_correction(N, n, x):
    return -(1j**n) / (2 * (N + 1)) * (np.exp(-1j * x) + (-1) ** n * np.exp(1j * x))


@pytest.mark.parametrize("N", [10, 40, 400])
def test_finite_sum_endpoint_identity(N):
    # aliasing terms J_(2(N+1)-n)(x) are negligible only while x << N
    x = np.linspace(0, N / 5, 41)
    for n in range(5):
        diff = bessel_JN(N, n, x) - bessel_J(n, x) - _endpoint_correction(N, n, x)
        assert np.abs(diff).max() < 1e-12


def test_finite_sum_first_order_convergence():
    # the plain difference is O(1/N), not spectrally small
    errs = [abs(bessel_JN(N, 3, 2.0) - bessel_J(3, 2.0)) for N in (50, 100, 200, 400)]
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    bound = [1.0 / (N + 1) for N in (50, 100, 200, 400)]
    assert all(e <= b for e, b in zip(errs, bound))
    assert errs[-1] == pytest.approx(abs(_endpoint_correction(400, 3, 2.0)), rel=1e-8)


def test_finite_sum_periodicity_in_order():
    # cos(k theta_j) is 2(N+1)-periodic in k
    N, x = 7, 3.1
    assert bessel_JN(N, 2, x) * ipow(-2) == pytest.approx(bessel_JN(N, 2 + 2 * (N + 1), x) * ipow(-2 - 2 * (N + 1)),
                                                         abs=1e-14)
