"""MT-QITE and baseline QITE drivers: trajectories, scans, accounting."""

import numpy as np
import pytest

from mtqite.driver import (
    DriverOptions,
    QiteRunError,
    TimeGrid,
    energy_scan,
    run_mtqite,
    run_qite_baseline,
)
from mtqite.models import PartitionSpec, build_tfim, build_xxz, make_partition
from mtqite.oracles import exact_ground
from mtqite.pauli import ObservableSum, PauliString
from mtqite.qite import BasisSet, Formulation, MeasurementLedger
from mtqite.states import StateVector, expectation
from mtqite.symmetry import SymmetryGroup, find_z2_symmetries, reduce_basis

from conftest import random_state_array


def full_basis(n):
    out = [PauliString(n, k & ((1 << n) - 1), k >> n, 0) for k in range(1, 1 << (2 * n))]
    out.sort(key=lambda p: (p.z_mask, p.x_mask))
    return BasisSet.from_strings(out)


PLUS1 = StateVector(1, np.array([1.0, 1.0]) / np.sqrt(2))


def _single_z_setup():
    h = ObservableSum.from_label_terms([(1.0, "Z")])
    part = make_partition(h, PartitionSpec(kind="trivial"))
    return part, [full_basis(1)]


def test_time_grid_validation():
    grid = TimeGrid.uniform(12, 0.5)
    assert len(grid.values) == 13
    assert grid.values[0] == 0.0
    assert grid.values[-1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        TimeGrid((0.3, 0.1), include_zero=False)
    with pytest.raises(ValueError):
        TimeGrid((0.1,), include_zero=True)


def test_zero_only_grid_leaves_state_alone():
    part, bases = _single_z_setup()
    record = run_mtqite(
        part, bases, PLUS1, TimeGrid((0.0,), True), n_steps=4,
        opts=DriverOptions(ground_space=exact_ground(part.full)),
    )
    assert all(s.dt_choices == (0.0,) for s in record.steps)
    energies = [s.energy for s in record.steps]
    assert np.allclose(energies, record.initial_energy)
    assert np.allclose(record.final_state.amplitudes, PLUS1.amplitudes)


def test_one_qubit_toy_converges():
    part, bases = _single_z_setup()
    gs = exact_ground(part.full)
    record = run_mtqite(
        part, bases, PLUS1, TimeGrid.uniform(12, 0.5), n_steps=10,
        opts=DriverOptions(ground_space=gs),
    )
    energies = [record.initial_energy] + [s.energy for s in record.steps]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] == pytest.approx(-1.0, abs=1e-4)
    assert record.final_infidelity < 1e-4


def test_monotonic_energy_with_zero_candidate(rng):
    labels = ["XI", "IZ", "ZZ", "YX"]
    h = ObservableSum.from_label_terms([(float(rng.normal()), l) for l in labels])
    part = make_partition(h, PartitionSpec(kind="trivial"))
    psi = StateVector(2, random_state_array(rng, 2))
    record = run_mtqite(
        part, [full_basis(2)], psi, TimeGrid.uniform(6, 0.5), n_steps=8
    )
    energies = [record.initial_energy] + [s.energy for s in record.steps]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_energy_scan_counts_and_upper_bound(rng):
    h = build_xxz(3, 1.0)
    part = make_partition(h, PartitionSpec(kind="even_odd"))
    bases = [full_basis(3), full_basis(3)]
    psi = StateVector(3, random_state_array(rng, 3))
    grid = TimeGrid.uniform(3, 0.4)
    from mtqite.qite import ReferenceSolver, TermData

    solver = ReferenceSolver(psi, "scan-test")
    steps = []
    for m, (term, basis) in enumerate(zip(part.terms, bases)):
        data = TermData(m, term, basis, Formulation.PAULI_ORDER2)
        table = {}
        for dt in grid.values:
            table[dt] = solver.step(data, dt) if dt else __import__(
                "mtqite.states", fromlist=["UnitaryStep"]
            ).UnitaryStep(term_index=m, dt=0.0, rotations=())
        steps.append(table)
    energies, best = energy_scan(psi, steps, h, None, "scan")
    assert len(energies) == 16  # (3 + zero)^2 candidates
    # identity candidate bounds the scan minimum by the reference energy
    ref_energy = expectation(psi, h).real
    assert energies[best] <= energies[(0.0, 0.0)] + 1e-12
    assert energies[(0.0, 0.0)] == pytest.approx(ref_energy)
    # the cartesian minimum is at least as good as the equal-dt diagonal
    diag = min(energies[(v, v)] for v in grid.values)
    assert energies[best] <= diag + 1e-12


def test_trivial_partition_matches_baseline_single_dt(rng):
    labels = ["XI", "IZ", "ZZ", "XY"]
    h = ObservableSum.from_label_terms([(float(rng.normal()), l) for l in labels])
    part = make_partition(h, PartitionSpec(kind="trivial"))
    psi = StateVector(2, random_state_array(rng, 2))
    grid = TimeGrid((0.21,), include_zero=False)
    bases = [full_basis(2)]
    mt = run_mtqite(part, bases, psi, grid, n_steps=6)
    base = run_qite_baseline(part, bases, psi, grid, n_steps=6)
    assert np.allclose(
        mt.final_state.amplitudes, base.final_state.amplitudes, atol=1e-12
    )
    for a, b in zip(mt.steps, base.steps):
        assert a.energy == pytest.approx(b.energy, abs=1e-12)


def test_first_step_system_identical_across_algorithms(rng):
    """Both algorithms solve the very same first linear system."""
    h = build_xxz(2, 0.6)
    part = make_partition(h, PartitionSpec(kind="trivial"))
    psi = StateVector(2, random_state_array(rng, 2))
    grid = TimeGrid((0.3,), include_zero=False)
    bases = [full_basis(2)]
    mt = run_mtqite(part, bases, psi, grid, n_steps=1)
    base = run_qite_baseline(part, bases, psi, grid, n_steps=1)
    assert mt.steps[0].energy == pytest.approx(base.steps[0].energy, abs=1e-12)


def test_baseline_reports_best_final_energy(rng):
    h = build_tfim(3, 1.0)
    part = make_partition(h, PartitionSpec(kind="trivial"))
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    psi = StateVector.product_state([minus] * 3)
    grid = TimeGrid.uniform(4, 0.5)
    ledger = MeasurementLedger()
    record = run_qite_baseline(
        part, [full_basis(3)], psi, grid, n_steps=3, ledger=ledger
    )
    assert record.best_dt in grid.nonzero
    assert record.steps[-1].energy <= record.initial_energy
    # lockstep accounting: all four runs contribute to the cost column
    assert record.steps[-1].cum_linear_paulis == ledger.count("linear_system")


def test_ledger_grid_size_independence_mtqite_and_linear_qite(rng):
    h = build_xxz(4, 1.0)
    group = find_z2_symmetries(h)
    halves = ([], [])
    for k in range(len(h)):
        halves[0 if min(h.restricted([k]).support) <= 1 else 1].append(k)
    part = make_partition(
        h,
        PartitionSpec(kind="explicit", groups=tuple(map(tuple, halves)), domain_size=3),
    )
    bases = [
        BasisSet.from_strings(reduce_basis(dom, group, 4)) for dom in part.domains
    ]
    psi_amps = np.zeros(16)
    psi_amps[0b0101] = 1.0
    psi = StateVector(4, psi_amps)

    counts = {}
    for count in (6, 12):
        for algo, runner in (("mt", run_mtqite), ("qite", run_qite_baseline)):
            ledger = MeasurementLedger()
            runner(
                part, bases, psi, TimeGrid.uniform(count, 0.5), n_steps=3,
                ledger=ledger, run_id=f"{algo}-{count}",
            )
            counts[(algo, count)] = ledger.count("linear_system")
    assert counts[("mt", 6)] == counts[("mt", 12)]
    ratio = counts[("qite", 12)] / counts[("qite", 6)]
    assert abs(ratio - 2.0) <= 0.2


def test_convergence_on_random_two_qubit(rng):
    for _ in range(3):
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        dense = (m + m.conj().T) / 2
        # express as a Pauli sum via projection onto the 16 strings
        terms = []
        for key in range(16):
            p = PauliString(2, key & 3, key >> 2, 0)
            coeff = np.trace(p.to_dense().conj().T @ dense) / 4
            terms.append((coeff, p))
        h = ObservableSum.from_terms(terms, 2)
        gs = exact_ground(h)
        if len(gs.basis) > 1:
            continue
        psi = StateVector(2, random_state_array(rng, 2))
        part = make_partition(h, PartitionSpec(kind="trivial"))
        record = run_mtqite(
            part, [full_basis(2)], psi, TimeGrid.uniform(12, 0.5), n_steps=50,
            opts=DriverOptions(ground_space=gs),
        )
        assert record.final_infidelity < 1e-6


def test_deterministic_reruns(rng):
    h = build_xxz(3, 0.8)
    part = make_partition(h, PartitionSpec(kind="even_odd"))
    bases = [full_basis(3)] * 2
    psi = StateVector(3, random_state_array(rng, 3))
    grid = TimeGrid.uniform(5, 0.5)
    a = run_mtqite(part, bases, psi, grid, n_steps=4)
    b = run_mtqite(part, bases, psi, grid, n_steps=4)
    assert [s.dt_choices for s in a.steps] == [s.dt_choices for s in b.steps]
    assert [s.energy for s in a.steps] == [s.energy for s in b.steps]
    assert np.array_equal(a.final_state.amplitudes, b.final_state.amplitudes)


def test_order1_breakdowns_excluded_not_fatal():
    # <Z> = 1 on |0>, so order-1 c goes negative for dt >= 0.5
    h = ObservableSum.from_label_terms([(1.0, "Z")])
    part = make_partition(h, PartitionSpec(kind="trivial"))
    psi = StateVector.basis_state(1, 0)
    grid = TimeGrid((0.0, 0.2, 0.9), include_zero=True)
    record = run_mtqite(
        part, [full_basis(1)], psi, grid, n_steps=1,
        opts=DriverOptions(formulation=Formulation.PAULI_ORDER1),
    )
    assert (0, 0.9) in record.steps[0].excluded


def test_unitary_ordering_switch(rng):
    h = build_xxz(3, 1.2)
    part = make_partition(h, PartitionSpec(kind="even_odd"))
    bases = [full_basis(3)] * 2
    psi = StateVector(3, random_state_array(rng, 3))
    grid = TimeGrid((0.0, 0.25, 0.5), include_zero=True)
    asc = run_mtqite(part, bases, psi, grid, 2, DriverOptions(ascending_first=True))
    desc = run_mtqite(part, bases, psi, grid, 2, DriverOptions(ascending_first=False))
    # both run; the orderings genuinely differ for non-commuting terms
    assert asc.steps[-1].energy != desc.steps[-1].energy


def test_geometric_grid():
    grid = TimeGrid.geometric(12, 0.5, 1e-3)
    assert len(grid.values) == 13
    assert grid.values[0] == 0.0
    assert grid.values[1] == pytest.approx(1e-3)
    assert grid.values[-1] == pytest.approx(0.5)
    ratios = np.diff(np.log(grid.values[1:]))
    assert np.allclose(ratios, ratios[0])
    with pytest.raises(ValueError):
        TimeGrid.geometric(5, 0.5, 0.6)


def test_local_granularity_composite_step(rng):
    """Per-cluster solves against one reference compose into a term step
    that tracks the term's exact ITE."""
    from mtqite.experiments import _support_clusters
    from mtqite.models import _window_domain
    from mtqite.oracles import exact_ite
    from mtqite.qite import ReferenceSolver, SolveUnit, TermData
    from mtqite.states import apply_unitary_step
    from mtqite.symmetry import reduce_basis

    h = build_xxz(4, 1.0)
    empty = SymmetryGroup.empty(4)
    units = []
    for cluster in _support_clusters(h):
        window = _window_domain(cluster.support, 4, 4)
        units.append(
            BasisSet.from_strings(reduce_basis(window, empty, 4))
        )
    data = TermData(
        0,
        h,
        units=[
            __import__("mtqite.qite", fromlist=["SolveUnit"]).SolveUnit(
                cluster, basis, Formulation.PAULI_ORDER2
            )
            for cluster, basis in zip(_support_clusters(h), units)
        ],
    )
    psi = StateVector(4, random_state_array(rng, 4))
    solver = ReferenceSolver(psi)
    dts = np.geomspace(3e-3, 3e-1, 6)
    errors = []
    for dt in dts:
        out = apply_unitary_step(psi, solver.step(data, float(dt)))
        errors.append(
            np.linalg.norm(out.amplitudes - exact_ite(psi, h, float(dt)).amplitudes)
        )
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert slope > 1.6  # full-width windows keep the composite second order
    assert len(data.units) == 3
