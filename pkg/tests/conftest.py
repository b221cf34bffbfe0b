import numpy as np
import pytest


def rand_herm(rng, n, scale=1.0):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (g + g.conj().T) / 2


def rand_psd(rng, n, scale=1.0):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (g @ g.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = np.diag([1.0 + 0j, -1.0])


def sharp_z_povm():
    from convexweight.devices import Povm
    return Povm([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def trivial_qubit_povm():
    from convexweight.devices import Povm
    return Povm([np.eye(2) / 2, np.eye(2) / 2])


def mub_pair():
    from convexweight.devices import MeasurementAssemblage
    return MeasurementAssemblage([
        [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])],
        [(np.eye(2) + PAULI_X) / 2, (np.eye(2) - PAULI_X) / 2],
    ])


def max_entangled_choi():
    """Choi state of the identity qubit channel."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return np.outer(psi, psi.conj())


def steered_assemblage(eta=1.0):
    """Assemblage from eta-noisy sharp MUB measurements on a Bell state."""
    from convexweight import hermitian as hm
    from convexweight.devices import StateAssemblage
    rho = max_entangled_choi()
    rows = []
    for basis in (PAULI_Z, PAULI_X):
        _, v = np.linalg.eigh(basis)
        row = []
        for k in range(2):
            e = eta * np.outer(v[:, k], v[:, k].conj()) + (1 - eta) * np.eye(2) / 2
            lifted = hm.kron(e.T, np.eye(2)) @ rho
            row.append(hm.as_hermitian(hm.partial_trace(lifted, (2, 2), "first")))
        rows.append(row)
    return StateAssemblage(rows)
