"""The QITE inner step: linear-system assembly in three formulations,
pseudoinverse solves, unitary-step construction, and distinct-Pauli
measurement accounting.

Expectation values are evaluated exactly on the emulator, but every value
a hardware run would have to measure is reduced to a signed full-register
Pauli string and recorded in a :class:`MeasurementLedger` under a
(reference id, string) key with distinct-count semantics.  The S matrix
never depends on the time step size, so all per-(term, reference)
quantities are computed once and reused across a time grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .fermion import OperatorPool
from .pauli import ObservableSum, PauliString, pack_key, product_phase_array
from .states import StateVector, UnitaryStep, apply_observable, expectation, pauli_action

__all__ = [
    "Formulation",
    "BasisSet",
    "TermData",
    "QiteLinearSystem",
    "MeasurementLedger",
    "NormalizationBreakdownError",
    "ReferenceSolver",
    "build_system",
    "solve",
    "qite_step",
    "equivalence_check",
    "EquivalenceReport",
]

DEFAULT_RCOND = 1e-8
DEFAULT_DROP_THRESHOLD = 1e-10

LINEAR_SYSTEM = "linear_system"
ENERGY_SCAN = "energy_scan"
PURPOSES = (LINEAR_SYSTEM, ENERGY_SCAN)


class Formulation(str, Enum):
    PAULI_ORDER1 = "pauli_order1"
    PAULI_ORDER2 = "pauli_order2"
    ANTIHERMITIAN_ORDER2 = "antihermitian_order2"


class NormalizationBreakdownError(RuntimeError):
    """The norm estimate c dropped to or below zero (time step too large)."""


# ---------------------------------------------------------------------------
# Measurement accounting


class MeasurementLedger:
    """Distinct (reference id, Pauli string) keys, split by purpose.

    Keys are packed ``(z << n) | x`` integers; re-recording an existing
    key never increments a counter.  ``record`` returns how many keys
    were new so callers can attribute costs per run.  Phase tracking is
    optional and only used by structural tests.
    """

    def __init__(self, track_phases: bool = False):
        self._seen: dict[tuple[str, str], np.ndarray] = {}
        self._counts: dict[str, int] = {p: 0 for p in PURPOSES}
        self._distinct: dict[str, np.ndarray] = {
            p: np.empty(0, dtype=np.int64) for p in PURPOSES
        }
        self.track_phases = track_phases
        self.phase_exponents: dict[str, set[int]] = {p: set() for p in PURPOSES}

    def record(self, purpose: str, reference_id: str, keys, phases=None) -> int:
        if purpose not in PURPOSES:
            raise ValueError(f"unknown ledger purpose {purpose!r}")
        keys = np.unique(np.asarray(keys, dtype=np.int64))
        keys = keys[keys != 0]  # the identity needs no measurement
        if keys.size == 0:
            return 0
        if self.track_phases and phases is not None:
            self.phase_exponents[purpose].update(
                int(p) % 4 for p in np.asarray(phases).ravel()
            )
        slot = (purpose, reference_id)
        existing = self._seen.get(slot)
        if existing is None:
            new_count = keys.size
            self._seen[slot] = keys
        else:
            pos = np.searchsorted(existing, keys)
            pos_clipped = np.minimum(pos, existing.size - 1)
            fresh = keys[(pos == existing.size) | (existing[pos_clipped] != keys)]
            new_count = fresh.size
            if new_count:
                self._seen[slot] = np.union1d(existing, fresh)
        if new_count:
            self._counts[purpose] += int(new_count)
        self._distinct[purpose] = np.union1d(self._distinct[purpose], keys)
        return int(new_count)

    def count(self, purpose: str) -> int:
        return self._counts[purpose]

    def distinct_count(self, purpose: str) -> int:
        """Distinct strings regardless of reference id (unkeyed count)."""
        return int(self._distinct[purpose].size)

    def keys_for(self, purpose: str, reference_id: str) -> np.ndarray:
        return self._seen.get((purpose, reference_id), np.empty(0, dtype=np.int64))

    def reference_ids(self, purpose: str) -> list[str]:
        return [ref for (p, ref) in self._seen if p == purpose]


# ---------------------------------------------------------------------------
# Static (state-independent) basis and term data


class BasisSet:
    """An ordered expansion basis: plain Pauli strings or a pool of
    anti-hermitian generators."""

    PAULI = "pauli"
    ANTIHERMITIAN = "antihermitian"

    def __init__(self, n_qubits: int, kind: str, elements: Sequence, labels: Sequence[str]):
        if kind not in (self.PAULI, self.ANTIHERMITIAN):
            raise ValueError(f"unknown basis kind {kind!r}")
        if not elements:
            raise ValueError("basis must be nonempty")
        self.n_qubits = n_qubits
        self.kind = kind
        self.elements = tuple(elements)
        self.labels = tuple(labels)
        self._s_keys: tuple[np.ndarray, np.ndarray] | None = None
        if kind == self.PAULI:
            self.xs = np.array([p.x_mask for p in self.elements], dtype=np.int64)
            self.zs = np.array([p.z_mask for p in self.elements], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def from_strings(cls, strings: Sequence[PauliString]) -> "BasisSet":
        for s in strings:
            if s.phase_exp != 0:
                raise ValueError("basis strings must carry no phase")
        return cls(
            strings[0].n_qubits, cls.PAULI, strings, [s.label for s in strings]
        )

    @classmethod
    def from_pool(cls, pool: OperatorPool) -> "BasisSet":
        for gen in pool.generators:
            if not gen.is_antihermitian():
                raise ValueError("pool generators must be anti-hermitian")
        return cls(pool.n_qubits, cls.ANTIHERMITIAN, pool.generators, pool.labels)

    # -- emulation kernels ----------------------------------------------

    def u_matrix(self, state: StateVector) -> np.ndarray:
        """Columns ``basis_element |state>``; the Gram matrix of these
        columns carries every S entry."""
        dim = 1 << self.n_qubits
        u = np.empty((dim, len(self.elements)), dtype=complex)
        if self.kind == self.PAULI:
            for k, element in enumerate(self.elements):
                u[:, k] = pauli_action(state, element)
        else:
            for k, element in enumerate(self.elements):
                u[:, k] = apply_observable(state, element)
        return u

    def s_measurement_keys(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct strings (and their phases) behind every S entry."""
        if self._s_keys is not None:
            return self._s_keys
        n = self.n_qubits
        if self.kind == self.PAULI:
            iu, ju = np.triu_indices(len(self.elements))
            x3 = self.xs[iu] ^ self.xs[ju]
            z3 = self.zs[iu] ^ self.zs[ju]
            g = product_phase_array(self.xs[iu], self.zs[iu], self.xs[ju], self.zs[ju])
            keys = pack_key(x3, z3, n)
            packed = np.unique(keys * 4 + g)
            keys, phases = packed >> 2, packed & 3
        else:
            key_chunks: list[np.ndarray] = []
            phase_chunks: list[np.ndarray] = []
            gens = [(g.xs, g.zs, g.coeffs) for g in self.elements]
            for i, (xi, zi, ci) in enumerate(gens):
                for xj, zj, cj in gens[: i + 1]:
                    x3 = (xi[:, None] ^ xj[None, :]).ravel()
                    z3 = (zi[:, None] ^ zj[None, :]).ravel()
                    fwd = product_phase_array(
                        xi[:, None], zi[:, None], xj[None, :], zj[None, :]
                    ).ravel()
                    rev = product_phase_array(
                        xj[None, :], zj[None, :], xi[:, None], zi[:, None]
                    ).ravel()
                    coeff = (ci[:, None] * cj[None, :]).ravel()
                    coeff = coeff * (1j ** fwd + 1j ** rev)
                    keys = pack_key(x3, z3, n)
                    uniq, inverse = np.unique(keys, return_inverse=True)
                    summed = np.zeros(len(uniq), dtype=complex)
                    np.add.at(summed, inverse, coeff)
                    live = np.abs(summed) > 1e-14
                    key_chunks.append(uniq[live])
                    phase_chunks.append(_coefficient_phases(summed[live]))
            keys = np.concatenate(key_chunks) if key_chunks else np.empty(0, np.int64)
            phases = np.concatenate(phase_chunks) if phase_chunks else np.empty(0, np.int64)
            packed = np.unique(keys * 4 + phases)
            keys, phases = packed >> 2, packed & 3
        self._s_keys = (keys, phases)
        return self._s_keys


def _coefficient_phases(coeffs: np.ndarray) -> np.ndarray:
    """Phase exponent of each measured string as declared by its coefficient
    (real positive -> 0, imaginary positive -> 1, and so on)."""
    re, im = coeffs.real, coeffs.imag
    phases = np.zeros(len(coeffs), dtype=np.int64)
    imag_dominant = np.abs(im) > np.abs(re)
    phases[imag_dominant & (im > 0)] = 1
    phases[imag_dominant & (im < 0)] = 3
    phases[~imag_dominant & (re < 0)] = 2
    return phases


def _observable_keys(obs: ObservableSum) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(obs.keys, dtype=np.int64)
    return keys, _coefficient_phases(obs.coeffs)


class SolveUnit:
    """One linear system: a hermitian operator piece and its basis.

    A classic solve uses a single unit covering the whole partition term.
    Local-granularity solves split the term into clusters of strings with
    a common support (the local terms of the Hamiltonian), each expanded
    on a D-qubit neighbourhood basis; units sharing a neighbourhood share
    the basis object, and with it the S matrix and its measurements.
    """

    def __init__(self, operator: ObservableSum, basis: BasisSet, formulation: Formulation):
        if not operator.is_hermitian():
            raise ValueError("solve operators must be hermitian")
        self.operator = operator
        self.basis = basis
        self.formulation = Formulation(formulation)
        self.h_squared = (
            operator.square()
            if self.formulation is not Formulation.PAULI_ORDER1
            else ObservableSum.zero(operator.n_qubits)
        )
        self._b_keys: tuple[np.ndarray, np.ndarray] | None = None

    def b_measurement_keys(self) -> tuple[np.ndarray, np.ndarray]:
        """Strings behind b, c and the energy of the unit's operator."""
        if self._b_keys is not None:
            return self._b_keys
        n = self.operator.n_qubits
        chunks = [_observable_keys(self.operator)]
        if len(self.h_squared):
            chunks.append(_observable_keys(self.h_squared))
        if self.basis.kind == BasisSet.PAULI:
            for obs in (self.operator, self.h_squared):
                if not len(obs):
                    continue
                x3 = (self.basis.xs[:, None] ^ obs.xs[None, :]).ravel()
                z3 = (self.basis.zs[:, None] ^ obs.zs[None, :]).ravel()
                g = product_phase_array(
                    self.basis.xs[:, None],
                    self.basis.zs[:, None],
                    obs.xs[None, :],
                    obs.zs[None, :],
                ).ravel()
                chunks.append((pack_key(x3, z3, n), g))
        else:
            for gen in self.basis.elements:
                for obs in (self.operator, self.h_squared):
                    if not len(obs):
                        continue
                    commutator = obs.commutator(gen)
                    if len(commutator):
                        chunks.append(_observable_keys(commutator))
        keys = np.concatenate([c[0] for c in chunks])
        phases = np.concatenate([c[1] for c in chunks])
        packed = np.unique(keys * 4 + phases)
        self._b_keys = (packed >> 2, packed & 3)
        return self._b_keys


class TermData:
    """Static data for one partition term: its ordered solve units."""

    def __init__(
        self,
        index: int,
        term: ObservableSum,
        basis: BasisSet | None = None,
        formulation: Formulation = Formulation.PAULI_ORDER2,
        units: list[SolveUnit] | None = None,
    ):
        self.index = index
        self.term = term
        self.formulation = Formulation(formulation)
        if units is None:
            if basis is None:
                raise ValueError("TermData needs a basis or explicit units")
            units = [SolveUnit(term, basis, formulation)]
        self.units = units

    @property
    def basis(self) -> BasisSet:
        return self.units[0].basis

    def b_measurement_keys(self) -> tuple[np.ndarray, np.ndarray]:
        chunks = [unit.b_measurement_keys() for unit in self.units]
        keys = np.concatenate([c[0] for c in chunks])
        phases = np.concatenate([c[1] for c in chunks])
        packed = np.unique(keys * 4 + phases)
        return packed >> 2, packed & 3


# ---------------------------------------------------------------------------
# Per-reference emulated tomography


@dataclass(frozen=True)
class QiteLinearSystem:
    s_matrix: np.ndarray
    b_vector: np.ndarray
    c_norm: float
    basis_labels: tuple[str, ...]
    formulation: Formulation

    def __post_init__(self):
        asym = np.max(np.abs(self.s_matrix - self.s_matrix.T)) if self.s_matrix.size else 0.0
        if asym > 1e-12:
            raise ValueError(f"S matrix asymmetric by {asym}")


class _BasisCache:
    __slots__ = ("u", "s_matrix", "svd", "ledger_done")

    def __init__(self, basis: BasisSet, state: StateVector):
        self.u = basis.u_matrix(state)
        gram = self.u.conj().T @ self.u
        s = (gram + gram.conj().T).real
        if basis.kind == BasisSet.ANTIHERMITIAN:
            s = -s
        self.s_matrix = s
        self.svd = np.linalg.svd(s, hermitian=True)
        self.ledger_done = False


class _UnitCache:
    __slots__ = ("exp_h", "exp_h2", "m1", "m2", "ledger_done")

    def __init__(self, unit: SolveUnit, state: StateVector, u: np.ndarray):
        eta = apply_observable(state, unit.operator)
        self.exp_h = float(np.vdot(state.amplitudes, eta).real)
        self.exp_h2 = float(np.vdot(eta, eta).real)
        self.m1 = u.conj().T @ eta
        if unit.formulation is Formulation.PAULI_ORDER1:
            self.m2 = np.zeros_like(self.m1)
        else:
            eta2 = apply_observable(state, unit.h_squared)
            self.m2 = u.conj().T @ eta2
        self.ledger_done = False


class ReferenceSolver:
    """Tomography emulation against one frozen reference state.

    All S-matrix data is cached per basis object (units sharing the same
    neighbourhood basis share it) and all operator-dependent data per
    solve unit, so solving across a whole time grid costs one set of
    emulated measurements (mirrored by the ledger's distinct-count
    semantics).
    """

    def __init__(
        self,
        state: StateVector,
        reference_id: str = "ref",
        ledger: MeasurementLedger | None = None,
    ):
        self.state = state
        self.reference_id = reference_id
        self.ledger = ledger
        self._basis_caches: dict[int, _BasisCache] = {}
        self._unit_caches: dict[int, _UnitCache] = {}

    def _basis_cache(self, basis: BasisSet) -> _BasisCache:
        cache = self._basis_caches.get(id(basis))
        if cache is None:
            cache = _BasisCache(basis, self.state)
            self._basis_caches[id(basis)] = cache
        if self.ledger is not None and not cache.ledger_done:
            s_keys, s_phases = basis.s_measurement_keys()
            self.ledger.record(LINEAR_SYSTEM, self.reference_id, s_keys, s_phases)
            cache.ledger_done = True
        return cache

    def _unit_cache(self, unit: SolveUnit) -> _UnitCache:
        cache = self._unit_caches.get(id(unit))
        if cache is None:
            cache = _UnitCache(unit, self.state, self._basis_cache(unit.basis).u)
            self._unit_caches[id(unit)] = cache
        if self.ledger is not None and not cache.ledger_done:
            b_keys, b_phases = unit.b_measurement_keys()
            self.ledger.record(LINEAR_SYSTEM, self.reference_id, b_keys, b_phases)
            cache.ledger_done = True
        return cache

    def _c_norm(self, unit: SolveUnit, cache: _UnitCache, dt: float, term_index: int) -> float:
        c = 1.0 - 2.0 * dt * cache.exp_h
        if unit.formulation is not Formulation.PAULI_ORDER1:
            c += 2.0 * dt * dt * cache.exp_h2
        if c <= 0.0:
            raise NormalizationBreakdownError(
                f"norm estimate c={c:.6g} for term {term_index} at dt={dt}; "
                "the time step is outside the expansion's validity"
            )
        return c

    def _unit_system(self, unit: SolveUnit, dt: float, term_index: int) -> QiteLinearSystem:
        basis_cache = self._basis_cache(unit.basis)
        cache = self._unit_cache(unit)
        c = self._c_norm(unit, cache, dt, term_index)
        if unit.formulation is Formulation.ANTIHERMITIAN_ORDER2:
            b = (2.0 * cache.m1.real - dt * cache.m2.real) / np.sqrt(c)
        elif unit.formulation is Formulation.PAULI_ORDER2:
            b = 2.0 * (cache.m1.imag - 0.5 * dt * cache.m2.imag) / np.sqrt(c)
        else:
            b = 2.0 * cache.m1.imag / np.sqrt(c)
        return QiteLinearSystem(
            s_matrix=basis_cache.s_matrix,
            b_vector=b,
            c_norm=float(c),
            basis_labels=unit.basis.labels,
            formulation=unit.formulation,
        )

    def system(self, data: TermData, dt: float) -> QiteLinearSystem:
        if len(data.units) != 1:
            raise ValueError("system() applies to single-unit terms; use step()")
        return self._unit_system(data.units[0], dt, data.index)

    def solve_coefficients(self, data: TermData, dt: float, rcond: float) -> tuple[np.ndarray, float]:
        """Minimum-norm solution and residual, reusing the cached SVD."""
        system = self.system(data, dt)
        u, s, vt = self._basis_cache(data.units[0].basis).svd
        a = _pinv_apply(u, s, vt, system.b_vector, rcond)
        residual = float(np.linalg.norm(system.s_matrix @ a - system.b_vector))
        return a, residual

    def step(
        self,
        data: TermData,
        dt: float,
        rcond: float = DEFAULT_RCOND,
        drop_threshold: float = DEFAULT_DROP_THRESHOLD,
    ) -> UnitaryStep:
        if dt == 0.0:
            return UnitaryStep(term_index=data.index, dt=0.0, rotations=())
        rotations = []
        segments = []
        supports = []
        dropped = 0
        residual_sq = 0.0
        for unit in data.units:
            system = self._unit_system(unit, dt, data.index)
            u, s, vt = self._basis_cache(unit.basis).svd
            a = _pinv_apply(u, s, vt, system.b_vector, rcond)
            residual_sq += float(
                np.linalg.norm(system.s_matrix @ a - system.b_vector) ** 2
            )
            segment = 0
            for element, angle in zip(unit.basis.elements, a * dt):
                if abs(angle) < drop_threshold:
                    dropped += 1
                    continue
                rotations.append((element, float(angle)))
                segment += 1
            segments.append(segment)
            mask = 0
            for q in unit.operator.support:
                mask |= 1 << q
            supports.append(mask)
        return UnitaryStep(
            term_index=data.index,
            dt=dt,
            rotations=tuple(rotations),
            residual=float(np.sqrt(residual_sq)),
            n_dropped=dropped,
            segments=tuple(segments),
            segment_supports=tuple(supports),
        )

    def energy(self, observable: ObservableSum, purpose: str = ENERGY_SCAN) -> float:
        """Hamiltonian expectation on the reference, ledgered per string."""
        value = expectation(self.state, observable).real
        if self.ledger is not None:
            keys, phases = _observable_keys(observable)
            self.ledger.record(purpose, self.reference_id, keys, phases)
        return float(value)


def _pinv_apply(u, s, vt, b, rcond: float) -> np.ndarray:
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros_like(b)
    inv = np.where(s > rcond * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return vt.T @ (inv * (u.T @ b))


# ---------------------------------------------------------------------------
# Spec-level one-shot entry points


def build_system(
    state: StateVector,
    term: ObservableSum,
    basis: Union[BasisSet, Sequence],
    dt: float,
    formulation: Formulation = Formulation.PAULI_ORDER2,
    ledger: MeasurementLedger | None = None,
    reference_id: str = "ref",
) -> QiteLinearSystem:
    data = _coerce_term_data(term, basis, formulation)
    solver = ReferenceSolver(state, reference_id, ledger)
    return solver.system(data, dt)


def solve(system: QiteLinearSystem, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    u, s, vt = np.linalg.svd(system.s_matrix, hermitian=True)
    return _pinv_apply(u, s, vt, system.b_vector, rcond)


def qite_step(
    state: StateVector,
    term: ObservableSum,
    basis: Union[BasisSet, Sequence],
    dt: float,
    formulation: Formulation = Formulation.PAULI_ORDER2,
    rcond: float = DEFAULT_RCOND,
    drop_threshold: float = DEFAULT_DROP_THRESHOLD,
    ledger: MeasurementLedger | None = None,
    reference_id: str = "ref",
    term_index: int = 0,
) -> UnitaryStep:
    data = _coerce_term_data(term, basis, formulation, term_index)
    solver = ReferenceSolver(state, reference_id, ledger)
    return solver.step(data, dt, rcond, drop_threshold)


def _coerce_term_data(term, basis, formulation, term_index: int = 0) -> TermData:
    if not isinstance(basis, BasisSet):
        elements = list(basis)
        if elements and isinstance(elements[0], PauliString):
            basis = BasisSet.from_strings(elements)
        else:
            basis = BasisSet(
                term.n_qubits,
                BasisSet.ANTIHERMITIAN,
                elements,
                [f"t{k}" for k in range(len(elements))],
            )
    return TermData(term_index, term, basis, formulation)


@dataclass(frozen=True)
class EquivalenceReport:
    """Deviations between the Pauli order-2 and anti-hermitian systems."""

    max_s_deviation: float
    max_b_deviation: float
    max_solution_deviation: float
    c_deviation: float


def equivalence_check(
    state: StateVector,
    term: ObservableSum,
    basis_strings: Sequence[PauliString],
    dt: float,
    rcond: float = DEFAULT_RCOND,
) -> EquivalenceReport:
    """Compare the Pauli order-2 system with its anti-hermitian mirror.

    With t_I = -i sigma_I the anti-hermitian system must satisfy
    S' = -S and b' = -b with an identical solution vector.
    """
    pauli_basis = BasisSet.from_strings(list(basis_strings))
    anti_elements = [
        ObservableSum.from_terms([(-1j, s)]) for s in basis_strings
    ]
    anti_basis = BasisSet(
        term.n_qubits,
        BasisSet.ANTIHERMITIAN,
        anti_elements,
        [f"-i*{s.label}" for s in basis_strings],
    )
    sys_p = build_system(state, term, pauli_basis, dt, Formulation.PAULI_ORDER2)
    sys_a = build_system(state, term, anti_basis, dt, Formulation.ANTIHERMITIAN_ORDER2)
    a_p = solve(sys_p, rcond)
    a_a = solve(sys_a, rcond)
    return EquivalenceReport(
        max_s_deviation=float(np.max(np.abs(sys_a.s_matrix + sys_p.s_matrix))),
        max_b_deviation=float(np.max(np.abs(sys_a.b_vector + sys_p.b_vector)))
        if sys_p.b_vector.size
        else 0.0,
        max_solution_deviation=float(np.max(np.abs(a_a - a_p))) if a_p.size else 0.0,
        c_deviation=abs(sys_a.c_norm - sys_p.c_norm),
    )
