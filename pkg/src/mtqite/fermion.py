"""Second-quantized operators, the Jordan-Wigner mapping, and the UCCGSD
anti-hermitian operator pool.

Spin-orbital ordering is fixed project-wide as ``mode = 2 * spatial + spin``
with spin up = 0, and the Jordan-Wigner convention is

    a_j      = Z_0 ... Z_{j-1} (X_j + i Y_j) / 2
    a_j^dag  = Z_0 ... Z_{j-1} (X_j - i Y_j) / 2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .pauli import ObservableSum, PauliString

__all__ = [
    "FermionOp",
    "OperatorPool",
    "jordan_wigner",
    "jordan_wigner_sum",
    "number_operator",
    "build_uccgsd_pool",
]

SPIN_UP = 0
SPIN_DOWN = 1


def mode_index(spatial: int, spin: int) -> int:
    return 2 * spatial + spin


@dataclass(frozen=True)
class FermionOp:
    """A single product of ladder operators with a complex coefficient.

    ``factors`` is an ordered sequence of ``(mode, dagger)`` pairs applied
    right to left, matching the written operator order.
    """

    coefficient: complex
    factors: tuple[tuple[int, bool], ...]

    @classmethod
    def creation(cls, mode: int, coefficient: complex = 1.0) -> "FermionOp":
        return cls(coefficient, ((mode, True),))

    @classmethod
    def annihilation(cls, mode: int, coefficient: complex = 1.0) -> "FermionOp":
        return cls(coefficient, ((mode, False),))

    @classmethod
    def product(cls, coefficient: complex, *factors: tuple[int, bool]) -> "FermionOp":
        return cls(coefficient, tuple(factors))

    def dagger(self) -> "FermionOp":
        return FermionOp(
            self.coefficient.conjugate() if isinstance(self.coefficient, complex)
            else complex(self.coefficient).conjugate(),
            tuple((mode, not dag) for mode, dag in reversed(self.factors)),
        )

    def max_mode(self) -> int:
        return max((m for m, _ in self.factors), default=-1)


def _ladder_image(mode: int, dagger: bool, n_modes: int) -> ObservableSum:
    z_tail = (1 << mode) - 1
    x_string = PauliString(n_modes, 1 << mode, z_tail, 0)
    y_string = PauliString(n_modes, 1 << mode, z_tail | (1 << mode), 0)
    y_coeff = -0.5j if dagger else 0.5j
    return ObservableSum.from_terms([(0.5, x_string), (y_coeff, y_string)], n_modes)


def jordan_wigner(op: FermionOp, n_modes: int) -> ObservableSum:
    """Qubit image of a single ladder-operator product."""
    if op.max_mode() >= n_modes:
        raise IndexError(
            f"mode {op.max_mode()} out of range for {n_modes} modes"
        )
    result = ObservableSum.identity(n_modes, op.coefficient)
    for mode, dag in op.factors:
        result = result @ _ladder_image(mode, dag, n_modes)
    return result


def jordan_wigner_sum(ops: Iterable[FermionOp], n_modes: int) -> ObservableSum:
    total = ObservableSum.zero(n_modes)
    for op in ops:
        total = total + jordan_wigner(op, n_modes)
    return total


def number_operator(n_modes: int) -> ObservableSum:
    """Total particle number, sum over modes of (I - Z)/2."""
    terms = [(0.5 * n_modes, PauliString.identity(n_modes))]
    terms += [(-0.5, PauliString.single(n_modes, q, "Z")) for q in range(n_modes)]
    return ObservableSum.from_terms(terms, n_modes)


@dataclass(frozen=True)
class OperatorPool:
    """Labeled anti-hermitian generators for the coupled-cluster ansatz."""

    n_qubits: int
    generators: tuple[ObservableSum, ...]
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.generators)


def _antihermitian_pair(op: FermionOp, n_modes: int) -> ObservableSum:
    return jordan_wigner(op, n_modes) - jordan_wigner(op.dagger(), n_modes)


def build_uccgsd_pool(n_spin_orbitals: int) -> OperatorPool:
    """Generalized singles and doubles pool, spin-conserving, JW-mapped.

    Singles run over same-spin pairs p > q; doubles over pairs of ordered
    index pairs (p > q, r > s) with matching spin multisets and
    (p, q) > (r, s) to drop adjoint duplicates.  Generators whose qubit
    image vanishes are removed.
    """
    if n_spin_orbitals % 2:
        raise ValueError("n_spin_orbitals must be even")
    n = n_spin_orbitals
    generators: list[ObservableSum] = []
    labels: list[str] = []

    for p in range(n):
        for q in range(p):
            if p % 2 != q % 2:
                continue
            image = _antihermitian_pair(
                FermionOp.product(1.0, (p, True), (q, False)), n
            )
            if len(image):
                generators.append(image)
                labels.append(f"single({p},{q})")

    pairs = [(p, q) for p in range(n) for q in range(p)]
    spin_sig = {pair: tuple(sorted(m % 2 for m in pair)) for pair in pairs}
    for a, creation in enumerate(pairs):
        for annihilation in pairs[:a]:
            if spin_sig[creation] != spin_sig[annihilation]:
                continue
            p, q = creation
            r, s = annihilation
            image = _antihermitian_pair(
                FermionOp.product(
                    1.0, (p, True), (q, True), (s, False), (r, False)
                ),
                n,
            )
            if len(image):
                generators.append(image)
                labels.append(f"double({p},{q}|{r},{s})")

    return OperatorPool(n, tuple(generators), tuple(labels))
