import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from radchain.chain import ChainSpec, flip_probability, green_finite_matrix
from radchain.field import default_field_params
from radchain.resolvent import F_matrix, f_sigma_NN
from radchain.special_functions import bessel_J_orders

from conftest import path_hamiltonian

PARAMS = default_field_params()
finite_t = st.floats(-60, 60, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(N=st.integers(1, 14), t=finite_t)
def test_propagator_unitary(N, t):
    U = green_finite_matrix(ChainSpec(N), t)
    assert np.abs(U.conj().T @ U - np.eye(N)).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 10), t1=finite_t, t2=finite_t)
def test_propagator_group_law(N, t1, t2):
    spec = ChainSpec(N)
    lhs = green_finite_matrix(spec, t1) @ green_finite_matrix(spec, t2)
    assert np.abs(lhs - green_finite_matrix(spec, t1 + t2)).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 15), x=st.floats(0.05, 300))
def test_bessel_recurrence(n, x):
    J = bessel_J_orders([n - 1, n, n + 1], x)
    assert abs(J[0] + J[2] - 2 * n / x * J[1]) < 1e-12 * max(1.0, 2 * n / x)


@settings(max_examples=40, deadline=None)
@given(j=st.integers(2, 12), t=st.floats(0, 200))
def test_flip_probability_ordered(j, t):
    # the front must pass site j before site j + 1
    p = flip_probability(j, t)
    q = flip_probability(j + 1, t)
    assert 0 <= q <= p <= 1


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-6, 12), log_nu=st.floats(-6, 1))
def test_self_energy_herglotz(re, log_nu):
    # Stieltjes transform of a positive measure: Im f^sigma < 0 below the axis
    val = f_sigma_NN(PARAMS, complex(re, -10**log_nu))
    assert val.imag < 0


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-4, 6), log_nu=st.floats(-4, 1))
def test_resolvent_linear_solve(re, log_nu):
    xi = complex(re, -10**log_nu)
    A = path_hamiltonian(6) - xi * np.eye(6)
    A[5, 5] -= PARAMS.v4 * f_sigma_NN(PARAMS, xi)
    G = np.linalg.inv(A)
    F = F_matrix(ChainSpec(6), PARAMS, xi)
    assert np.abs(F - G).max() < 1e-9 * max(1.0, np.abs(G).max())
