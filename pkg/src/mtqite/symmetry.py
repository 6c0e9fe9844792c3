"""Z2 symmetry machinery: stabilizer discovery, normalizer/coset basis
reduction, and site-inversion transport of unitary steps.

Stabilizer search is a brute-force sweep over all ``4**n`` strings, which
is instantaneous at the benchmark sizes (n <= 8) and capped at n = 10.
Coset reduction filters candidate strings by commutation with the
full-register generators; stabilizer elements supported inside the
domain then merge candidates into cosets and the canonically smallest
representative survives.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .pauli import ObservableSum, PauliString, SizeCapError, pack_key
from .states import StateVector, UnitaryStep, expectation

__all__ = [
    "SymmetryGroup",
    "find_z2_symmetries",
    "reduce_basis",
    "transport_by_inversion",
    "reverse_bits",
    "site_inversion_expectation",
    "sector_projector_hamiltonian",
    "stabilizer_expectations",
]

ENUMERATION_CAP = 10


@dataclass(frozen=True)
class SymmetryGroup:
    """Independent mutually commuting Pauli generators plus a chosen sector."""

    n_qubits: int
    generators: tuple[PauliString, ...]
    sector: tuple[int, ...]

    def __post_init__(self):
        if len(self.generators) != len(self.sector):
            raise ValueError("one sector eigenvalue required per generator")
        if any(s not in (-1, 1) for s in self.sector):
            raise ValueError("sector eigenvalues must be +-1")

    def __len__(self) -> int:
        return len(self.generators)

    def with_sector(self, sector: Sequence[int]) -> "SymmetryGroup":
        return SymmetryGroup(self.n_qubits, self.generators, tuple(sector))

    @classmethod
    def empty(cls, n_qubits: int) -> "SymmetryGroup":
        return cls(n_qubits, (), ())


def _popcount(arr):
    return np.bitwise_count(arr).astype(np.int64)


def find_z2_symmetries(h: ObservableSum) -> SymmetryGroup:
    """Greedy maximal independent set of strings commuting with all of h.

    Enumerates every string in canonical (z, x) order, keeps those that
    commute with each Hamiltonian term, then greedily extracts generators
    that commute with everything already kept and are GF(2)-independent
    of it.  The chosen sector defaults to all +1 eigenvalues.
    """
    n = h.n_qubits
    if n > ENUMERATION_CAP:
        raise SizeCapError(f"symmetry enumeration capped at {ENUMERATION_CAP} qubits")
    mask = (1 << n) - 1
    keys = np.arange(1, 1 << (2 * n), dtype=np.int64)  # identity excluded
    xs = keys & mask
    zs = keys >> n
    ok = np.ones(len(keys), dtype=bool)
    for xt, zt in zip(h.xs, h.zs):
        parity = (_popcount(xs & int(zt)) + _popcount(zs & int(xt))) & 1
        ok &= parity == 0
    cand = keys[ok]

    generators: list[PauliString] = []
    echelon: dict[int, int] = {}
    while cand.size:
        key = int(cand[0])
        cand = cand[1:]
        vec = key
        while vec:
            lead = vec.bit_length() - 1
            if lead in echelon:
                vec ^= echelon[lead]
            else:
                break
        if vec == 0:
            continue  # product of already chosen generators
        echelon[vec.bit_length() - 1] = vec
        gx, gz = key & mask, key >> n
        generators.append(PauliString(n, gx, gz, 0))
        if cand.size:
            parity = (_popcount((cand & mask) & gz) + _popcount((cand >> n) & gx)) & 1
            cand = cand[parity == 0]

    return SymmetryGroup(n, tuple(generators), (1,) * len(generators))


def _group_element_keys(group: SymmetryGroup) -> np.ndarray:
    """Packed (x, z) keys of every non-identity stabilizer group element."""
    n = group.n_qubits
    keys = {0}
    for gen in group.generators:
        gk = int(pack_key(gen.x_mask, gen.z_mask, n))
        keys |= {k ^ gk for k in keys}
    keys.discard(0)
    return np.array(sorted(keys), dtype=np.int64)


def reduce_basis(
    domain: Sequence[int], group: SymmetryGroup, n_qubits: int | None = None
) -> list[PauliString]:
    """Coset representatives of the domain strings under the stabilizer.

    Starts from all non-identity strings supported on ``domain`` (embedded
    in the full register), keeps those commuting with every generator,
    merges strings differing by a stabilizer element supported inside the
    domain, and returns the canonically smallest representative of each
    coset in canonical order.
    """
    n = group.n_qubits if n_qubits is None else n_qubits
    domain = tuple(sorted(domain))
    if any(q < 0 or q >= n for q in domain):
        raise ValueError(f"domain {domain} escapes the register of {n} qubits")
    d = len(domain)
    local = np.arange(1, 1 << (2 * d), dtype=np.int64)
    lx = local & ((1 << d) - 1)
    lz = local >> d
    xs = np.zeros(len(local), dtype=np.int64)
    zs = np.zeros(len(local), dtype=np.int64)
    for j, q in enumerate(domain):
        xs |= ((lx >> j) & 1) << q
        zs |= ((lz >> j) & 1) << q

    ok = np.ones(len(local), dtype=bool)
    for gen in group.generators:
        parity = (_popcount(xs & gen.z_mask) + _popcount(zs & gen.x_mask)) & 1
        ok &= parity == 0
    keys = np.sort(pack_key(xs[ok], zs[ok], n))

    domain_mask = 0
    for q in domain:
        domain_mask |= 1 << q
    elements = [
        int(e)
        for e in _group_element_keys(group)
        if ((e & ((1 << n) - 1)) | (e >> n)) & ~domain_mask == 0
    ]

    reps: list[PauliString] = []
    seen: set[int] = set()
    mask = (1 << n) - 1
    for key in keys:
        key = int(key)
        if key in seen:
            continue
        reps.append(PauliString(n, key & mask, key >> n, 0))
        seen.add(key)
        for e in elements:
            seen.add(key ^ e)
    return reps


def reverse_bits(mask: int, n_qubits: int) -> int:
    out = 0
    for q in range(n_qubits):
        out |= ((mask >> q) & 1) << (n_qubits - 1 - q)
    return out


def _reverse_string(p: PauliString) -> PauliString:
    n = p.n_qubits
    return PauliString(n, reverse_bits(p.x_mask, n), reverse_bits(p.z_mask, n), p.phase_exp)


def _reverse_observable(obs: ObservableSum) -> ObservableSum:
    n = obs.n_qubits
    xs = np.array([reverse_bits(int(x), n) for x in obs.xs], dtype=np.int64)
    zs = np.array([reverse_bits(int(z), n) for z in obs.zs], dtype=np.int64)
    return ObservableSum(n, xs, zs, obs.coeffs)


def transport_by_inversion(
    step: UnitaryStep, n_qubits: int, term_index: int | None = None
) -> UnitaryStep:
    """The step with every generator's qubit order reversed, same angles.

    Valid when the target term is the site-inversion image of the step's
    term and the reference state has a definite inversion eigenvalue; the
    equivalence is checked by tests, not assumed here.  Within each solve
    segment the reversed rotations are re-sorted into canonical basis
    order, and the segments themselves are re-ordered by their mirrored
    neighbourhood position, so the result matches what a direct solve on
    the image term would produce, ordering included.
    """

    def _sort_key(rotation):
        gen = rotation[0]
        if isinstance(gen, PauliString):
            return (gen.z_mask, gen.x_mask)
        return (int(gen.zs[0]), int(gen.xs[0])) if len(gen) else (0, 0)

    def _reverse_rotation(rotation):
        gen, angle = rotation
        moved = (
            _reverse_string(gen)
            if isinstance(gen, PauliString)
            else _reverse_observable(gen)
        )
        return (moved, angle)

    segments = step.segments if step.segments else (len(step.rotations),)
    supports = (
        step.segment_supports
        if len(step.segment_supports) == len(segments)
        else (0,) * len(segments)
    )
    pieces = []
    start = 0
    for length, support in zip(segments, supports):
        chunk = sorted(
            (_reverse_rotation(r) for r in step.rotations[start : start + length]),
            key=_sort_key,
        )
        moved_support = reverse_bits(support, n_qubits)
        order_key = (
            min((q for q in range(n_qubits) if (moved_support >> q) & 1), default=0),
            moved_support,
        )
        pieces.append((order_key, moved_support, chunk))
        start += length
    pieces.sort(key=lambda item: item[0])
    rotations = tuple(r for _, _, chunk in pieces for r in chunk)
    return UnitaryStep(
        term_index=step.term_index if term_index is None else term_index,
        dt=step.dt,
        rotations=rotations,
        residual=step.residual,
        n_dropped=step.n_dropped,
        segments=tuple(len(chunk) for _, _, chunk in pieces),
        segment_supports=tuple(sup for _, sup, _ in pieces),
    )


def site_inversion_expectation(state: StateVector) -> complex:
    """``<psi|R|psi>`` for the qubit-order-reversing operator R."""
    n = state.n_qubits
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for q in range(n):
        rev |= ((idx >> q) & 1) << (n - 1 - q)
    return complex(np.vdot(state.amplitudes, state.amplitudes[rev]))


def sector_projector_hamiltonian(group: SymmetryGroup) -> ObservableSum:
    """Auxiliary operator whose ground space is the chosen symmetry sector.

    Minus the equally weighted sum of all non-identity stabilizer group
    elements, each signed by its target eigenvalue, so imaginary-time
    evolution under it filters every wrong-sector component.
    """
    n = group.n_qubits
    terms = []
    for r in range(1, len(group.generators) + 1):
        for subset in combinations(range(len(group.generators)), r):
            element = PauliString.identity(n)
            target = 1
            for g in subset:
                element = element.mul(group.generators[g])
                target *= group.sector[g]
            terms.append((-float(target), element))
    if not terms:
        return ObservableSum.zero(n)
    return ObservableSum.from_terms(terms, n)


def stabilizer_expectations(state: StateVector, group: SymmetryGroup) -> np.ndarray:
    return np.array(
        [expectation(state, gen).real for gen in group.generators], dtype=float
    )
