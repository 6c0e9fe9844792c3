"""Shared oracle helpers.

The dense constructions here deliberately avoid the package's symplectic
machinery: matrices are assembled from literal 2x2 blocks and Kronecker
products so they can serve as independent ground truth.
"""

from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def dense_from_label(label: str) -> np.ndarray:
    """Dense matrix of a Pauli label, qubit 0 leftmost and little-endian.

    Qubit 0 is the least significant amplitude-index bit, so it is the
    rightmost Kronecker factor.
    """
    return reduce(np.kron, [PAULI_MATS[ch] for ch in reversed(label)])


def random_state_array(rng: np.random.Generator, n_qubits: int) -> np.ndarray:
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return amps / np.linalg.norm(amps)


def random_hermitian_sum_labels(rng: np.random.Generator, n_qubits: int, n_terms: int):
    """Random real-coefficient Pauli label terms (possibly with duplicates)."""
    letters = "IXYZ"
    terms = []
    for _ in range(n_terms):
        label = "".join(rng.choice(list(letters)) for _ in range(n_qubits))
        terms.append((float(rng.normal()), label))
    return terms


def fock_ladder_matrix(mode: int, n_modes: int, dagger: bool) -> np.ndarray:
    """Occupation-basis ladder operator with Jordan-Wigner sign structure.

    Basis index bit q is the occupation of mode q; the annihilator picks
    up (-1)**(number of occupied modes below it).
    """
    dim = 1 << n_modes
    mat = np.zeros((dim, dim), dtype=complex)
    for f in range(dim):
        if (f >> mode) & 1:
            sign = (-1) ** int(bin(f & ((1 << mode) - 1)).count("1"))
            mat[f ^ (1 << mode), f] = sign
    return mat.conj().T if dagger else mat


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
