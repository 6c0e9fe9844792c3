"""Benchmark Hamiltonians and Hamiltonian partitions.

Builders return :class:`ObservableSum` instances; spin chains use open
boundaries throughout.  ``make_partition`` splits a Hamiltonian into
ordered groups of its canonical Pauli terms, attaches per-term qubit
domains of a configured size, and can detect pairs of terms related by
site inversion for measurement reuse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fcidump import FcidumpData
from .fermion import FermionOp, OperatorPool, jordan_wigner_sum
from .pauli import ObservableSum, PauliString

__all__ = [
    "HamiltonianPartition",
    "PartitionSpec",
    "build_tfim",
    "build_xxz",
    "build_hubbard",
    "molecular_hamiltonian",
    "make_partition",
]


def build_tfim(n: int, h_over_j: float) -> ObservableSum:
    """Transverse-field Ising chain, -sum Z_i Z_{i+1} + (h/J) sum X_i."""
    if n < 2:
        raise ValueError("TFIM needs at least 2 sites")
    terms = []
    for i in range(n - 1):
        zz = PauliString(n, 0, (1 << i) | (1 << (i + 1)), 0)
        terms.append((-1.0, zz))
    for i in range(n):
        terms.append((h_over_j, PauliString.single(n, i, "X")))
    return ObservableSum.from_terms(terms, n)


def build_xxz(n: int, j_coupling: float) -> ObservableSum:
    """XXZ Heisenberg chain, sum (X_i X_{i+1} + Y_i Y_{i+1} + J Z_i Z_{i+1})."""
    if n < 2:
        raise ValueError("XXZ needs at least 2 sites")
    terms = []
    for i in range(n - 1):
        bond = (1 << i) | (1 << (i + 1))
        terms.append((1.0, PauliString(n, bond, 0, 0)))
        terms.append((1.0, PauliString(n, bond, bond, 0)))
        terms.append((j_coupling, PauliString(n, 0, bond, 0)))
    return ObservableSum.from_terms(terms, n)


def build_hubbard(n_sites: int, u: float) -> ObservableSum:
    """Open-chain fermionic Hubbard model with unit hopping, JW-mapped.

    Spin orbitals are ordered mode = 2 * site + spin (up = 0), giving a
    2 * n_sites qubit register.
    """
    if n_sites < 1:
        raise ValueError("Hubbard needs at least 1 site")
    n_modes = 2 * n_sites
    ops: list[FermionOp] = []
    for i in range(n_sites - 1):
        for spin in (0, 1):
            a, b = 2 * i + spin, 2 * (i + 1) + spin
            ops.append(FermionOp.product(-1.0, (a, True), (b, False)))
            ops.append(FermionOp.product(-1.0, (b, True), (a, False)))
    for i in range(n_sites):
        up, down = 2 * i, 2 * i + 1
        ops.append(
            FermionOp.product(float(u), (up, True), (up, False), (down, True), (down, False))
        )
    return jordan_wigner_sum(ops, n_modes)


def molecular_hamiltonian(data: FcidumpData) -> ObservableSum:
    """Qubit image of the electronic Hamiltonian of a parsed FCIDUMP.

    The core energy is carried separately by the caller and is not folded
    into the returned operator.
    """
    return jordan_wigner_sum(data.fermion_ops(), data.n_spin_orbitals)


@dataclass(frozen=True)
class HamiltonianPartition:
    """A Hamiltonian with an ordered term split and per-term domains."""

    full: ObservableSum
    terms: tuple[ObservableSum, ...]
    domains: tuple[tuple[int, ...], ...]
    #: term index -> (source term index, qubit permutation new <- old)
    symmetry_links: dict[int, tuple[int, tuple[int, ...]]] = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.full.n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    def validate(self, tol: float = 1e-12) -> None:
        total = ObservableSum.zero(self.full.n_qubits)
        for term in self.terms:
            total = total + term
        if not total.allclose(self.full, tol):
            raise ValueError("partition terms do not recombine to the Hamiltonian")
        for term, domain in zip(self.terms, self.domains):
            if not set(term.support) <= set(domain):
                raise ValueError("term support escapes its domain")
        for target, (source, perm) in self.symmetry_links.items():
            moved = permute_qubits(self.terms[source], perm)
            if not moved.allclose(self.terms[target]):
                raise ValueError(f"symmetry link {source}->{target} does not hold")


def permute_qubits(obs: ObservableSum, perm: Sequence[int]) -> ObservableSum:
    """Relabel qubits, sending qubit q of the input to perm[q]."""
    n = obs.n_qubits
    xs = np.zeros(len(obs), dtype=np.int64)
    zs = np.zeros(len(obs), dtype=np.int64)
    for q in range(n):
        target = perm[q]
        xs |= ((obs.xs >> q) & 1) << target
        zs |= ((obs.zs >> q) & 1) << target
    return ObservableSum(n, xs, zs, obs.coeffs)


@dataclass(frozen=True)
class PartitionSpec:
    """How to split a Hamiltonian into partition terms.

    kind is one of:

    * ``trivial`` - the whole Hamiltonian as a single term;
    * ``explicit`` - ``groups`` lists canonical term indices per group;
    * ``even_odd`` - chain split by bond parity (two-site terms by their
      left site, single-site terms by their own site);
    * ``greedy_commuting`` - ``n_groups`` groups filled fragment by
      fragment in descending |coefficient| order, each fragment going to
      the group keeping the most ``pool`` generators commuting with every
      member (ties to the lowest group index).
    """

    kind: str = "trivial"
    groups: tuple[tuple[int, ...], ...] | None = None
    n_groups: int | None = None
    pool: OperatorPool | None = None
    #: one size for every term, or a per-term sequence; None keeps the
    #: minimal contiguous window
    domain_size: int | tuple[int, ...] | None = None
    detect_inversion: bool = False


def _window_domain(support: tuple[int, ...], d: int | None, n: int) -> tuple[int, ...]:
    """Smallest contiguous window over the support, widened to size d.

    Widening is symmetric, preferring the left side for an odd leftover,
    then clipped at the register boundary (re-extending the other way so
    the window keeps size d whenever the register allows).
    """
    if not support:
        lo, hi = 0, 1
    else:
        lo, hi = min(support), max(support) + 1
    width = hi - lo
    if d is None or d <= width:
        if d is not None and d < width:
            raise ValueError(
                f"domain size {d} smaller than a term support window of {width}"
            )
        return tuple(range(lo, hi))
    if d > n:
        raise ValueError(f"domain size {d} exceeds the register ({n} qubits)")
    leftover = d - width
    lo -= (leftover + 1) // 2
    if lo < 0:
        lo = 0
    if lo + d > n:
        lo = n - d
    return tuple(range(lo, lo + d))


def _greedy_commuting_groups(
    h: ObservableSum, n_groups: int, pool: OperatorPool
) -> list[list[int]]:
    strings = [PauliString(h.n_qubits, int(x), int(z), 0) for x, z in zip(h.xs, h.zs)]
    # Pool generator J commutes with fragment W iff every string of J does.
    compat = np.zeros((len(pool), len(strings)), dtype=bool)
    for gi, gen in enumerate(pool.generators):
        for fi, frag in enumerate(strings):
            compat[gi, fi] = all(
                PauliString(h.n_qubits, int(x), int(z), 0).commutes(frag)
                for x, z in zip(gen.xs, gen.zs)
            )
    order = sorted(
        range(len(strings)), key=lambda k: (-abs(h.coeffs[k]), int(h.zs[k]), int(h.xs[k]))
    )
    groups: list[list[int]] = [[] for _ in range(n_groups)]
    group_mask = [np.ones(len(pool), dtype=bool) for _ in range(n_groups)]
    for frag in order:
        scores = [int(np.sum(mask & compat[:, frag])) for mask in group_mask]
        best = int(np.argmax(scores))
        groups[best].append(frag)
        group_mask[best] &= compat[:, frag]
    return [sorted(g) for g in groups]


def _even_odd_groups(h: ObservableSum) -> list[list[int]]:
    groups: list[list[int]] = [[], []]
    for k in range(len(h)):
        occ = int(h.xs[k]) | int(h.zs[k])
        sites = [q for q in range(h.n_qubits) if (occ >> q) & 1]
        anchor = min(sites) if sites else 0
        groups[anchor % 2].append(k)
    return groups


def _detect_inversion_links(
    terms: Sequence[ObservableSum], n: int
) -> dict[int, tuple[int, tuple[int, ...]]]:
    perm = tuple(n - 1 - q for q in range(n))
    links: dict[int, tuple[int, tuple[int, ...]]] = {}
    for j in range(len(terms)):
        for i in range(j):
            if i in links:
                continue
            if permute_qubits(terms[i], perm).allclose(terms[j]):
                links[j] = (i, perm)
                break
    return links


def make_partition(h: ObservableSum, spec: PartitionSpec) -> HamiltonianPartition:
    """Split ``h`` per the spec; see :class:`PartitionSpec` for the kinds."""
    n = h.n_qubits
    if spec.kind == "trivial":
        groups = [list(range(len(h)))]
    elif spec.kind == "explicit":
        if not spec.groups:
            raise ValueError("explicit partition requires groups")
        groups = [list(g) for g in spec.groups]
        covered = sorted(k for g in groups for k in g)
        if covered != list(range(len(h))):
            raise ValueError(
                "explicit groups must cover every Hamiltonian term exactly once"
            )
    elif spec.kind == "even_odd":
        groups = _even_odd_groups(h)
    elif spec.kind == "greedy_commuting":
        if not spec.n_groups or spec.pool is None:
            raise ValueError("greedy_commuting requires n_groups and a pool")
        groups = _greedy_commuting_groups(h, spec.n_groups, spec.pool)
    else:
        raise ValueError(f"unknown partition kind {spec.kind!r}")

    groups = [g for g in groups if g]
    terms = tuple(h.restricted(g) for g in groups)
    if spec.domain_size is None or isinstance(spec.domain_size, int):
        sizes = [spec.domain_size] * len(terms)
    else:
        sizes = list(spec.domain_size)
        if len(sizes) != len(terms):
            raise ValueError("one domain size required per partition term")
    domains = tuple(
        _window_domain(term.support, size, n) for term, size in zip(terms, sizes)
    )
    links = _detect_inversion_links(terms, n) if spec.detect_inversion else {}
    part = HamiltonianPartition(full=h, terms=terms, domains=domains, symmetry_links=links)
    part.validate()
    return part
