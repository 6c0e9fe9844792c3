"""Ground-truth engines: exact diagonalization, exact normalized imaginary
time evolution, and fidelity against possibly degenerate ground spaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import DENSE_QUBIT_CAP, ObservableSum, SizeCapError
from .states import StateVector, inner

__all__ = ["GroundSpace", "VanishingNormError", "exact_ground", "exact_ite", "fidelity"]

DEGENERACY_TOL = 1e-9


class VanishingNormError(RuntimeError):
    """Evolved state is numerically orthogonal to the retained spectrum."""


@dataclass(frozen=True)
class GroundSpace:
    energy: float
    basis: tuple[StateVector, ...]

    @property
    def degeneracy(self) -> int:
        return len(self.basis)


def _check_cap(obs: ObservableSum) -> None:
    if obs.n_qubits > DENSE_QUBIT_CAP:
        raise SizeCapError(
            f"dense oracle capped at {DENSE_QUBIT_CAP} qubits, got {obs.n_qubits}"
        )


def exact_ground(h: ObservableSum, degeneracy_tol: float = DEGENERACY_TOL) -> GroundSpace:
    """Lowest eigenspace of a hermitian sum by dense diagonalization."""
    _check_cap(h)
    vals, vecs = np.linalg.eigh(h.to_dense())
    lowest = vals[0]
    members = [
        StateVector(h.n_qubits, vecs[:, k], normalize=True)
        for k in range(len(vals))
        if vals[k] - lowest <= degeneracy_tol
    ]
    return GroundSpace(energy=float(lowest), basis=tuple(members))


def exact_ite(state: StateVector, h: ObservableSum, tau: float) -> StateVector:
    """Normalized ``exp(-tau H)|psi>`` via dense eigendecomposition."""
    _check_cap(h)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if state.n_qubits != h.n_qubits:
        raise ValueError("state and Hamiltonian sizes differ")
    if tau == 0.0:
        return state
    vals, vecs = np.linalg.eigh(h.to_dense())
    # Work with shifted eigenvalues so the leading weight is O(1).
    weights = np.exp(-tau * (vals - vals[0]))
    coeffs = weights * (vecs.conj().T @ state.amplitudes)
    nrm = np.linalg.norm(coeffs)
    if nrm < 1e-100:
        raise VanishingNormError(
            "state has numerically vanished under imaginary-time evolution"
        )
    return StateVector(h.n_qubits, vecs @ (coeffs / nrm))


def fidelity(state: StateVector, gs: GroundSpace) -> float:
    """Squared norm of the projection onto the ground space (degeneracy-safe)."""
    total = 0.0
    for member in gs.basis:
        total += abs(inner(member, state)) ** 2
    return min(float(total), 1.0)
