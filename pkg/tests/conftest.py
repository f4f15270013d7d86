import numpy as np
import pytest

from radchain.chain import ChainSpec
from radchain.field import default_field_params


@pytest.fixture(scope="session")
def params():
    return default_field_params()


@pytest.fixture(scope="session")
def spec6():
    return ChainSpec(6)


def path_hamiltonian(N):
    return np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
