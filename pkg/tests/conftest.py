import numpy as np
import pytest

from zenosim.model import DeviceModel, build_joint_hamiltonian
from zenosim.qmath import DensityMatrix, HermitianOperator, Ket

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture(scope="session")
def qubit_model():
    """The generic two-branch qubit model used by the convergence checks:
    one branch generates sx rotations, the other sz rotations."""
    dev = DeviceModel(
        labels=("x", "z"),
        hamiltonians=(HermitianOperator(SX), HermitianOperator(SZ)),
    )
    return dev, build_joint_hamiltonian(dev)


@pytest.fixture()
def equal_phi():
    return Ket([1, 1])


@pytest.fixture()
def rho_zero():
    return DensityMatrix(np.diag([1.0, 0.0]))
