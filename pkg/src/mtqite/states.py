"""Dense statevector engine: Pauli rotations, expectations, unitary steps.

Amplitude indexing is little-endian: bit ``q`` of the amplitude index is
the computational-basis value of qubit ``q``.  All public operations
return new :class:`StateVector` instances; amplitude arrays are treated
as read-only once wrapped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .pauli import (
    DENSE_QUBIT_CAP,
    DimensionMismatchError,
    ObservableSum,
    PauliString,
    SizeCapError,
    _PHASE_VALUES,
)

__all__ = [
    "StateVector",
    "UnitaryStep",
    "InvalidGeneratorError",
    "apply_pauli_string",
    "apply_pauli_rotation",
    "apply_observable",
    "apply_unitary_step",
    "expectation",
    "inner",
]

NORM_TOL = 1e-12


class InvalidGeneratorError(ValueError):
    """Rotation generator carries a non-real phase."""


_INDEX_CACHE: dict[int, np.ndarray] = {}


def _indices(n_qubits: int) -> np.ndarray:
    idx = _INDEX_CACHE.get(n_qubits)
    if idx is None:
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        idx.setflags(write=False)
        _INDEX_CACHE[n_qubits] = idx
    return idx


class StateVector:
    """A normalized register of ``2**n_qubits`` complex amplitudes."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes, *, normalize: bool = False):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError(
                f"expected {1 << n_qubits} amplitudes, got {amplitudes.shape}"
            )
        nrm = float(np.linalg.norm(amplitudes))
        if normalize:
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amplitudes = amplitudes / nrm
        elif abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond {NORM_TOL}")
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes
        self.amplitudes.setflags(write=False)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        """Computational basis state from a bitstring, qubit 0 leftmost."""
        index = 0
        for q, ch in enumerate(bits):
            if ch not in "01":
                raise ValueError(f"invalid bit {ch!r} in {bits!r}")
            index |= int(ch) << q
        return cls.basis_state(len(bits), index)

    @classmethod
    def product_state(cls, single_qubit_states: Sequence[np.ndarray]) -> "StateVector":
        """Kronecker product of per-qubit 2-vectors (qubit 0 first)."""
        full = np.array([1.0 + 0.0j])
        for v in reversed(single_qubit_states):
            full = np.kron(full, np.asarray(v, dtype=complex))
        return cls(len(single_qubit_states), full, normalize=True)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def dump_binary(self, path) -> None:
        """Debug dump: little-endian interleaved re/im doubles."""
        out = np.empty(2 * len(self.amplitudes), dtype="<f8")
        out[0::2] = self.amplitudes.real
        out[1::2] = self.amplitudes.imag
        out.tofile(path)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def _require_size(state: StateVector, op) -> None:
    if state.n_qubits != op.n_qubits:
        raise DimensionMismatchError(
            f"state on {state.n_qubits} qubits, operator on {op.n_qubits}"
        )


def _string_action(
    psi: np.ndarray, n_qubits: int, x: int, z: int, phase_exp: int
) -> np.ndarray:
    """Raw amplitudes of ``i**phase_exp W(x, z) |psi>``."""
    idx = _indices(n_qubits)
    pref = _PHASE_VALUES[(phase_exp + int(x & z).bit_count()) % 4]
    if x == 0:
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
        return pref * signs * psi
    # Gather form: (W psi)[i] = pref * (-1)^par(x&z) * (-1)^par(i&z) * psi[i^x]
    if int(x & z).bit_count() & 1:
        pref = -pref
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
    return pref * signs * psi[idx ^ x]


def apply_pauli_string(state: StateVector, p: PauliString) -> StateVector:
    _require_size(state, p)
    amps = _string_action(state.amplitudes, state.n_qubits, p.x_mask, p.z_mask, p.phase_exp)
    return StateVector(state.n_qubits, amps)


def pauli_action(state: StateVector, p: PauliString) -> np.ndarray:
    """Raw amplitudes of ``P|state>`` without wrapping in a StateVector."""
    _require_size(state, p)
    return _string_action(
        state.amplitudes, state.n_qubits, p.x_mask, p.z_mask, p.phase_exp
    )


def apply_observable(state: StateVector, obs: ObservableSum) -> np.ndarray:
    """Raw (generally unnormalized) amplitudes of ``obs |state>``."""
    _require_size(state, obs)
    out = np.zeros_like(state.amplitudes)
    for c, x, z in zip(obs.coeffs, obs.xs, obs.zs):
        out += c * _string_action(state.amplitudes, state.n_qubits, int(x), int(z), 0)
    return out


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """Apply ``exp(-i theta P)``: cos(theta)|psi> - i sin(theta) P|psi>."""
    if p.phase_exp not in (0, 2):
        raise InvalidGeneratorError(
            f"rotation generator must carry a real sign, got phase i**{p.phase_exp}"
        )
    _require_size(state, p)
    if theta == 0.0:
        return state
    rotated = _string_action(
        state.amplitudes, state.n_qubits, p.x_mask, p.z_mask, p.phase_exp
    )
    amps = np.cos(theta) * state.amplitudes - 1j * np.sin(theta) * rotated
    return StateVector(state.n_qubits, amps)


def expectation(state: StateVector, obs: Union[ObservableSum, PauliString]) -> complex:
    """Exact ``<psi|O|psi>`` (complex for non-hermitian O)."""
    if isinstance(obs, PauliString):
        _require_size(state, obs)
        acted = _string_action(
            state.amplitudes, state.n_qubits, obs.x_mask, obs.z_mask, obs.phase_exp
        )
        return complex(np.vdot(state.amplitudes, acted))
    _require_size(state, obs)
    total = 0.0 + 0.0j
    for c, x, z in zip(obs.coeffs, obs.xs, obs.zs):
        acted = _string_action(state.amplitudes, state.n_qubits, int(x), int(z), 0)
        total += c * complex(np.vdot(state.amplitudes, acted))
    return total


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError("states act on different register sizes")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


Generator = Union[PauliString, ObservableSum]


@dataclass(frozen=True)
class UnitaryStep:
    """One term's unitary update, an ordered product of rotations.

    Each rotation pairs a generator with a real angle.  A
    :class:`PauliString` generator P realizes ``exp(-i angle P)``; an
    anti-hermitian :class:`ObservableSum` generator t realizes
    ``exp(angle t)``, expanded into Pauli rotations when applied in
    ``rotation_product`` mode.
    """

    term_index: int
    dt: float
    rotations: tuple[tuple[Generator, float], ...]
    residual: float = 0.0
    n_dropped: int = 0
    #: rotation counts per solve unit, for transport bookkeeping; empty
    #: means a single segment spanning all rotations
    segments: tuple[int, ...] = ()
    #: support bitmask of each solve unit's operator, aligned with segments
    segment_supports: tuple[int, ...] = ()

    @property
    def pauli_rotations(self) -> tuple[tuple[PauliString, float], ...]:
        """The step expanded into elementary Pauli rotations."""
        out: list[tuple[PauliString, float]] = []
        for gen, angle in self.rotations:
            if isinstance(gen, PauliString):
                out.append((gen, angle))
            else:
                # exp(angle * sum_k i r_k W_k) with purely imaginary
                # coefficients splits into exp(-i (-angle r_k) W_k).
                for c, string in gen.terms:
                    out.append((string, -angle * c.imag))
        return tuple(out)

    @property
    def rotation_count(self) -> int:
        """Number of elementary Pauli rotations with nonzero angle."""
        return sum(1 for _, angle in self.pauli_rotations if angle != 0.0)

    def is_empty(self) -> bool:
        return all(angle == 0.0 for _, angle in self.rotations)

    def generator_sum(self, n_qubits: int) -> ObservableSum:
        """Total anti-hermitian generator G with the step acting as exp(G)."""
        total = ObservableSum.zero(n_qubits)
        for gen, angle in self.rotations:
            if isinstance(gen, PauliString):
                total = total + ObservableSum.from_terms([(-1j * angle, gen)])
            else:
                total = total + angle * gen
        return total


def apply_unitary_step(
    state: StateVector, step: UnitaryStep, mode: str = "rotation_product"
) -> StateVector:
    """Apply a unitary step in one of two modes.

    ``rotation_product`` applies the stored rotations in canonical order
    (the circuit the depth metric counts).  ``exact_generator``
    exponentiates the full generator densely on the step's domain qubits,
    as a diagnostic for the ordering approximation.
    """
    if mode == "rotation_product":
        for gen, angle in step.rotations:
            if angle == 0.0:
                continue
            if isinstance(gen, PauliString):
                state = apply_pauli_rotation(state, gen, angle)
            else:
                for c, string in gen.terms:
                    state = apply_pauli_rotation(state, string, -angle * c.imag)
        return state
    if mode == "exact_generator":
        gen = step.generator_sum(state.n_qubits)
        if len(gen) == 0:
            return state
        domain = gen.support
        if not domain:
            # Pure identity generator: a global phase.
            return StateVector(
                state.n_qubits, state.amplitudes * np.exp(gen.identity_coefficient())
            )
        if len(domain) > DENSE_QUBIT_CAP:
            raise SizeCapError(
                f"exact_generator capped at {DENSE_QUBIT_CAP} domain qubits"
            )
        return _apply_dense_on_domain(state, scipy.linalg.expm(_dense_on(gen, domain)), domain)
    raise ValueError(f"unknown application mode {mode!r}")


def _dense_on(obs: ObservableSum, domain: tuple[int, ...]) -> np.ndarray:
    """Dense matrix of a sum supported on ``domain``, in domain-local indexing."""
    pos = {q: j for j, q in enumerate(domain)}
    local_terms = []
    for c, string in obs.terms:
        x = z = 0
        for q in string.support:
            x |= ((string.x_mask >> q) & 1) << pos[q]
            z |= ((string.z_mask >> q) & 1) << pos[q]
        local_terms.append((c, PauliString(max(len(domain), 1), x, z, 0)))
    return ObservableSum.from_terms(local_terms, max(len(domain), 1)).to_dense()


def _apply_dense_on_domain(
    state: StateVector, unitary: np.ndarray, domain: tuple[int, ...]
) -> StateVector:
    """Apply a dense operator to a subset of qubits via tensor reshaping."""
    n = state.n_qubits
    # numpy tensor axis 0 is the most significant index bit, i.e. qubit n-1.
    tensor = state.amplitudes.reshape((2,) * n)
    axes = [n - 1 - q for q in domain]
    rest = [ax for ax in range(n) if ax not in axes]
    moved = np.transpose(tensor, axes=axes[::-1] + rest)
    block = moved.reshape(1 << len(domain), -1)
    out = unitary @ block
    out = out.reshape([2] * len(domain) + [2] * len(rest))
    inv = np.argsort(np.array(axes[::-1] + rest))
    restored = np.transpose(out, axes=inv).reshape(-1)
    return StateVector(n, restored)
