"""Batch-experiment orchestration: problem assembly from a config, seeded
initial-state generation, algorithm dispatch, and CSV/JSON result emission.

Runs inside a batch execute sequentially and deterministically; result
rows are keyed by (run id, step) and the CSV is byte-stable for a fixed
config and seed apart from the wall-time column.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .driver import (
    DriverOptions,
    RunRecord,
    TimeGrid,
    run_mtqite,
    run_qite_baseline,
)
from .fcidump import parse_fcidump
from .fermion import build_uccgsd_pool
from .models import (
    HamiltonianPartition,
    PartitionSpec,
    _window_domain,
    build_hubbard,
    build_tfim,
    build_xxz,
    make_partition,
    molecular_hamiltonian,
)
from .oracles import GroundSpace, VanishingNormError, exact_ground, exact_ite
from .pauli import ObservableSum
from .qite import (
    ENERGY_SCAN,
    LINEAR_SYSTEM,
    BasisSet,
    Formulation,
    MeasurementLedger,
    SolveUnit,
    TermData,
)
from .states import StateVector
from .symmetry import (
    SymmetryGroup,
    find_z2_symmetries,
    reduce_basis,
    sector_projector_hamiltonian,
    stabilizer_expectations,
)

__all__ = [
    "Problem",
    "ResultRow",
    "CSV_COLUMNS",
    "build_problem",
    "generate_initial_batch",
    "run_experiment",
    "sweep_experiment",
    "write_csv",
    "derived_quantities",
]

CSV_COLUMNS = (
    "run_id",
    "algorithm",
    "model",
    "step",
    "dt_choices",
    "energy",
    "exact_energy",
    "infidelity",
    "cum_rotations",
    "cum_paulis_linear",
    "cum_paulis_energy",
    "wall_time_s",
)

INFIDELITY_FLOOR = 1e-16
SECTOR_TOL = 1e-8
MAX_RESAMPLES = 100


@dataclass
class ResultRow:
    run_id: str
    algorithm: str
    model: str
    step: int
    dt_choices: tuple[float, ...]
    energy: float
    exact_energy: float
    infidelity: float
    cum_rotations: int
    cum_paulis_linear: int
    cum_paulis_energy: int
    wall_time_s: float

    def as_csv_fields(self) -> list[str]:
        return [
            self.run_id,
            self.algorithm,
            self.model,
            str(self.step),
            "|".join(f"{v:.17g}" for v in self.dt_choices),
            f"{self.energy:.17g}",
            f"{self.exact_energy:.17g}",
            f"{self.infidelity:.17g}",
            str(self.cum_rotations),
            str(self.cum_paulis_linear),
            str(self.cum_paulis_energy),
            f"{self.wall_time_s:.6f}",
        ]


@dataclass
class Problem:
    """Everything an experiment needs, assembled once from the config."""

    config: ExperimentConfig
    hamiltonian: ObservableSum
    core_energy: float
    ground_space: GroundSpace
    group: SymmetryGroup
    partition: HamiltonianPartition
    term_data: list[TermData]
    initial_states: list[StateVector]
    grid: TimeGrid
    n_electrons: int | None = None

    @property
    def exact_energy(self) -> float:
        return self.ground_space.energy + self.core_energy


def _build_model(config: ExperimentConfig) -> tuple[ObservableSum, float, int | None]:
    m = config.model
    if m.kind == "tfim":
        return build_tfim(m.n_sites, m.h_over_j), 0.0, None
    if m.kind == "xxz":
        return build_xxz(m.n_sites, m.j), 0.0, None
    if m.kind == "hubbard":
        return build_hubbard(m.n_sites, m.u), 0.0, None
    data = parse_fcidump(m.fcidump)
    return molecular_hamiltonian(data), data.core_energy, data.n_electrons


def _named_groups(
    name: str, h: ObservableSum, n_electrons: int | None = None
) -> tuple[tuple[int, ...], ...]:
    n = h.n_qubits
    if name in ("chem_frontier_3p", "chem_frontier_2p"):
        # Split off the frontier-orbital block: strings whose X support
        # lies inside the four spin orbitals around the Fermi level get
        # their own imaginary-time variable, which is where the strong
        # correlation of stretched geometries lives.
        if n_electrons is None:
            raise ConfigError(f"{name} needs a molecule model")
        homo = n_electrons // 2 - 1
        hot = 0
        for spatial in (homo, homo + 1):
            hot |= (1 << (2 * spatial)) | (1 << (2 * spatial + 1))
        diagonal, rest, frontier = [], [], []
        for k in range(len(h)):
            x = int(h.xs[k])
            if x == 0:
                diagonal.append(k)
            elif x & ~hot == 0:
                frontier.append(k)
            else:
                rest.append(k)
        if name == "chem_frontier_3p":
            return tuple(diagonal), tuple(rest), tuple(frontier)
        return tuple(diagonal + rest), tuple(frontier)
    if name in ("tfim_3p", "tfim_2p"):
        if n % 2:
            raise ConfigError(f"{name} requires an even number of sites")
        mid = n // 2
        left, right, middle = [], [], []
        for k, (_, s) in enumerate(h.terms):
            sup = s.support
            if max(sup) <= mid - 1:
                left.append(k)
            elif min(sup) >= mid:
                right.append(k)
            else:
                middle.append(k)
        if name == "tfim_3p":
            return tuple(left), tuple(right), tuple(middle)
        return tuple(left + right), tuple(middle)
    if name == "xxz_halves":
        n_bonds = n - 1
        first, second = [], []
        for k, (_, s) in enumerate(h.terms):
            start = min(s.support)
            (first if start < (n_bonds + 1) // 2 else second).append(k)
        return tuple(first), tuple(second)
    raise ConfigError(f"unknown named partition {name!r}")


def _partition_spec(
    config: ExperimentConfig, h: ObservableSum, pool, n_electrons: int | None = None
) -> PartitionSpec:
    p = config.partition
    domain_size = config.domain_size
    if isinstance(domain_size, list):
        domain_size = tuple(domain_size)
    if config.solve_granularity == "local":
        # per-unit neighbourhoods carry D; term domains stay minimal
        domain_size = None
    detect = config.use_inversion_symmetry
    if p.kind == "named":
        groups = _named_groups(p.name, h, n_electrons)
        if p.name == "tfim_2p" and isinstance(domain_size, int):
            # the grouped term spans the register; the middle keeps D
            domain_size = (h.n_qubits, domain_size)
        return PartitionSpec(
            kind="explicit", groups=groups, domain_size=domain_size, detect_inversion=detect
        )
    if p.kind == "explicit":
        groups = tuple(tuple(g) for g in p.groups)
        return PartitionSpec(
            kind="explicit", groups=groups, domain_size=domain_size, detect_inversion=detect
        )
    if p.kind == "greedy_commuting":
        return PartitionSpec(
            kind="greedy_commuting",
            n_groups=p.n_groups,
            pool=pool,
            domain_size=domain_size,
            detect_inversion=detect,
        )
    return PartitionSpec(kind=p.kind, domain_size=domain_size, detect_inversion=detect)


def build_problem(config: ExperimentConfig) -> Problem:
    h, core, n_electrons = _build_model(config)
    ground = exact_ground(h)

    group = SymmetryGroup.empty(h.n_qubits)
    if config.basis == "domain_z2" or config.initial.kind == "symmetric_batch":
        group = find_z2_symmetries(h)
        if config.sector is not None:
            if len(config.sector) != len(group):
                raise ConfigError(
                    f"sector needs {len(group)} entries, got {len(config.sector)}"
                )
            group = group.with_sector(tuple(int(s) for s in config.sector))

    pool = None
    if config.basis == "pool":
        pool = build_uccgsd_pool(h.n_qubits)

    partition = make_partition(h, _partition_spec(config, h, pool, n_electrons))
    formulation = Formulation(config.formulation)

    if config.basis == "pool":
        shared = BasisSet.from_pool(pool)
        term_data = [
            TermData(m, term, shared, formulation)
            for m, term in enumerate(partition.terms)
        ]
    else:
        reduction_group = group if config.basis == "domain_z2" else SymmetryGroup.empty(h.n_qubits)
        window_cache: dict[tuple[int, ...], BasisSet] = {}

        def window_basis(domain):
            basis = window_cache.get(domain)
            if basis is None:
                basis = BasisSet.from_strings(
                    reduce_basis(domain, reduction_group, h.n_qubits)
                )
                window_cache[domain] = basis
            return basis

        term_data = []
        if config.solve_granularity == "local":
            size = config.domain_size
            for m, term in enumerate(partition.terms):
                units = []
                for cluster in _support_clusters(term):
                    d = size[m] if isinstance(size, (list, tuple)) else size
                    window = _window_domain(cluster.support, d, h.n_qubits)
                    units.append(SolveUnit(cluster, window_basis(window), formulation))
                term_data.append(TermData(m, term, units=units))
        else:
            for m, (term, domain) in enumerate(zip(partition.terms, partition.domains)):
                term_data.append(TermData(m, term, window_basis(domain), formulation))

    if config.grid.spacing == "geometric":
        grid = TimeGrid.geometric(
            config.grid.count, config.grid.t_max, config.grid.t_min,
            config.grid.include_zero,
        )
    else:
        grid = TimeGrid.uniform(
            config.grid.count, config.grid.t_max, config.grid.include_zero
        )
    initial_states = generate_initial_batch(
        config, group, h.n_qubits, n_electrons=n_electrons
    )
    return Problem(
        config=config,
        hamiltonian=h,
        core_energy=core,
        ground_space=ground,
        group=group,
        partition=partition,
        term_data=term_data,
        initial_states=initial_states,
        grid=grid,
        n_electrons=n_electrons,
    )


def _support_clusters(term: ObservableSum) -> list[ObservableSum]:
    """Split a term into its local pieces: strings sharing a support set,
    ordered by (lowest qubit, support mask).  A pure-identity piece is
    dropped: it only rescales the imaginary-time flow and needs no
    unitary or measurement."""
    by_support: dict[int, list[int]] = {}
    for k in range(len(term)):
        occ = int(term.xs[k]) | int(term.zs[k])
        if occ == 0:
            continue
        by_support.setdefault(occ, []).append(k)
    def key(mask):
        low = (mask & -mask).bit_length() - 1 if mask else 0
        return (low, mask)
    return [
        term.restricted(by_support[mask]) for mask in sorted(by_support, key=key)
    ]


_KET0 = np.array([1.0, 0.0], dtype=complex)
_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def generate_initial_batch(
    config: ExperimentConfig,
    group: SymmetryGroup,
    n_qubits: int,
    n_electrons: int | None = None,
) -> list[StateVector]:
    """Seeded initial states per the config's ``initial`` section.

    ``symmetric_batch`` starts from the all-zeros state, applies an X gate
    then an H gate per qubit with the configured probabilities, projects
    into the chosen symmetry sector by exact imaginary-time evolution
    under the sector Hamiltonian, and rejects-and-resamples states that
    fail to land in the sector.
    """
    spec = config.initial
    if spec.kind == "bitstring":
        if len(spec.bitstring) != n_qubits:
            raise ConfigError(
                f"bitstring length {len(spec.bitstring)} != {n_qubits} qubits"
            )
        return [StateVector.from_bitstring(spec.bitstring)]
    if spec.kind == "hartree_fock":
        if n_electrons is None:
            raise ConfigError("hartree_fock initial state needs a molecule model")
        index = sum(1 << q for q in range(n_electrons))
        return [StateVector.basis_state(n_qubits, index)]

    rng = np.random.default_rng(config.seed)
    aux = sector_projector_hamiltonian(group) if len(group) else None
    states: list[StateVector] = []
    attempts = 0
    while len(states) < spec.count:
        attempts += 1
        if attempts > MAX_RESAMPLES * spec.count:
            raise ConfigError(
                "symmetric_batch could not reach the requested sector; "
                "check the sector against the gate probabilities"
            )
        qubit_states = []
        for _ in range(n_qubits):
            v = _KET0
            if rng.random() < spec.x_prob:
                v = _X @ v
            if rng.random() < spec.h_prob:
                v = _H @ v
            qubit_states.append(v)
        psi = StateVector.product_state(qubit_states)
        if aux is not None and len(aux):
            try:
                psi = exact_ite(psi, aux, spec.projection_beta)
            except VanishingNormError:
                continue
            sector = np.array(group.sector, dtype=float)
            if np.max(np.abs(stabilizer_expectations(psi, group) - sector)) > SECTOR_TOL:
                continue
        states.append(psi)
    return states


def derived_quantities(problem: Problem) -> dict:
    """Sizes and budgets derivable before running; `check` prints these and
    `run` embeds them in the summary so the two can never disagree."""
    partition = problem.partition
    per_term_keys = []
    for data in problem.term_data:
        merged, _ = data.b_measurement_keys()
        for unit in data.units:
            s_keys, _ = unit.basis.s_measurement_keys()
            merged = np.union1d(merged, s_keys)
        per_term_keys.append(int(merged[merged != 0].size))
    return {
        "n_qubits": problem.hamiltonian.n_qubits,
        "model_terms": len(problem.hamiltonian),
        "core_energy": problem.core_energy,
        "exact_energy": problem.exact_energy,
        "ground_degeneracy": problem.ground_space.degeneracy,
        "stabilizer_generators": [g.label for g in problem.group.generators],
        "sector": list(problem.group.sector),
        "partition_sizes": [len(t) for t in partition.terms],
        "domains": [list(d) for d in partition.domains],
        "symmetry_links": {
            str(k): v[0] for k, v in partition.symmetry_links.items()
        },
        "term_units": [len(d.units) for d in problem.term_data],
        "basis_sizes": [
            sorted({len(u.basis) for u in d.units}) for d in problem.term_data
        ],
        "grid_values": [float(v) for v in problem.grid.values],
        "batch_size": len(problem.initial_states),
        "linear_keys_per_term_reference": per_term_keys,
    }


def _driver_options(problem: Problem) -> DriverOptions:
    cfg = problem.config
    return DriverOptions(
        formulation=Formulation(cfg.formulation),
        rcond=cfg.rcond,
        drop_threshold=cfg.drop_threshold,
        ascending_first=cfg.ascending_first,
        use_inversion=cfg.use_inversion_symmetry,
        ground_space=problem.ground_space,
    )


def _rows_from_record(
    record: RunRecord, problem: Problem, wall_time: float
) -> list[ResultRow]:
    cfg = problem.config
    core = problem.core_energy
    rows = [
        ResultRow(
            run_id=record.run_id,
            algorithm=record.algorithm,
            model=cfg.model.tag,
            step=0,
            dt_choices=(),
            energy=record.initial_energy + core,
            exact_energy=problem.exact_energy,
            infidelity=max(record.initial_infidelity, INFIDELITY_FLOOR),
            cum_rotations=0,
            cum_paulis_linear=0,
            cum_paulis_energy=0,
            wall_time_s=wall_time,
        )
    ]
    for step in record.steps:
        rows.append(
            ResultRow(
                run_id=record.run_id,
                algorithm=record.algorithm,
                model=cfg.model.tag,
                step=step.step,
                dt_choices=step.dt_choices,
                energy=step.energy + core,
                exact_energy=problem.exact_energy,
                infidelity=max(step.infidelity, INFIDELITY_FLOOR),
                cum_rotations=step.cum_rotations,
                cum_paulis_linear=step.cum_linear_paulis,
                cum_paulis_energy=step.cum_energy_paulis,
                wall_time_s=wall_time,
            )
        )
    return rows


def run_experiment(
    config: ExperimentConfig, output_dir: Path | None = None
) -> tuple[list[ResultRow], dict, dict[str, Path]]:
    """Execute the configured experiment; returns rows, summary, and paths."""
    t_start = time.perf_counter()
    problem = build_problem(config)
    derived = derived_quantities(problem)
    opts = _driver_options(problem)

    algorithms = ("qite", "mtqite") if config.algorithm == "both" else (config.algorithm,)
    rows: list[ResultRow] = []
    ledgers: dict[str, MeasurementLedger] = {}
    records: dict[str, list[RunRecord]] = {}
    for algorithm in algorithms:
        ledger = MeasurementLedger()
        ledgers[algorithm] = ledger
        records[algorithm] = []
        n_steps = config.trotter_steps
        if algorithm == "qite" and config.qite_trotter_steps:
            n_steps = config.qite_trotter_steps
        for idx, state in enumerate(problem.initial_states):
            run_id = f"{config.name}/s{idx:02d}"
            t_run = time.perf_counter()
            if algorithm == "mtqite":
                record = run_mtqite(
                    problem.partition, problem.term_data, state, problem.grid,
                    n_steps, opts, ledger, run_id=f"{run_id}/mtqite",
                )
            else:
                record = run_qite_baseline(
                    problem.partition, problem.term_data, state, problem.grid,
                    n_steps, opts, ledger, run_id=f"{run_id}/qite",
                )
            record.run_id = run_id
            records[algorithm].append(record)
            rows.extend(
                _rows_from_record(record, problem, time.perf_counter() - t_run)
            )

    rows.sort(key=lambda r: (r.algorithm, r.run_id, r.step))
    summary = _summarize(problem, derived, records, ledgers)
    summary["wall_time_s"] = time.perf_counter() - t_start

    paths: dict[str, Path] = {}
    if output_dir is not None or config.output is not None:
        base = Path(output_dir) if output_dir is not None else config.output.resolved_directory()
        base.mkdir(parents=True, exist_ok=True)
        csv_path = base / f"{config.name}.csv"
        write_csv(rows, csv_path)
        paths["csv"] = csv_path
        summary_path = base / f"{config.name}_summary.json"
        with open(summary_path, "w") as handle:
            json.dump(summary, handle, indent=2, sort_keys=True)
            handle.write("\n")
        paths["summary"] = summary_path
        if config.output.figures:
            from . import plotting

            paths.update(plotting.render_run_figures(rows, base / config.name))
    return rows, summary, paths


def _summarize(problem, derived, records, ledgers) -> dict:
    summary = {
        "config": problem.config.to_dict(),
        "derived": derived,
        "algorithms": {},
    }
    for algorithm, recs in records.items():
        ledger = ledgers[algorithm]
        per_step = []
        n_steps = max(len(r.steps) for r in recs)
        core = problem.core_energy
        for k in range(n_steps):
            energies = [r.steps[k].energy + core for r in recs if len(r.steps) > k]
            infids = [
                max(r.steps[k].infidelity, INFIDELITY_FLOOR)
                for r in recs
                if len(r.steps) > k
            ]
            per_step.append(
                {
                    "step": k + 1,
                    "mean_energy": float(np.mean(energies)),
                    "std_energy": float(np.std(energies)),
                    "mean_infidelity": float(np.mean(infids)),
                    "std_infidelity": float(np.std(infids)),
                    "min_infidelity": float(np.min(infids)),
                    "max_infidelity": float(np.max(infids)),
                }
            )
        best = min(recs, key=lambda r: (r.final_infidelity, r.run_id))
        summary["algorithms"][algorithm] = {
            "runs": len(recs),
            "per_step": per_step,
            "best_sample": {
                "run_id": best.run_id,
                "final_infidelity": max(best.final_infidelity, INFIDELITY_FLOOR),
                "final_energy": best.final_energy + core,
            },
            "mean_final_infidelity": float(
                np.mean([max(r.final_infidelity, INFIDELITY_FLOOR) for r in recs])
            ),
            "totals": {
                "linear_paulis": ledger.count(LINEAR_SYSTEM),
                "energy_paulis": ledger.count(ENERGY_SCAN),
                "linear_paulis_unkeyed": ledger.distinct_count(LINEAR_SYSTEM),
                "energy_paulis_unkeyed": ledger.distinct_count(ENERGY_SCAN),
                "rotations_best_run": best.steps[-1].cum_rotations if best.steps else 0,
                "rotations_mean": float(
                    np.mean([r.steps[-1].cum_rotations for r in recs if r.steps])
                ),
            },
        }
    return summary


def write_csv(rows: list[ResultRow], path: Path) -> None:
    import csv

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv_fields())


def set_config_value(payload: dict, dotted: str, value) -> None:
    """Set a nested config key by dotted path, e.g. ``model.u``."""
    keys = dotted.split(".")
    target = payload
    for key in keys[:-1]:
        target = target.setdefault(key, {})
        if not isinstance(target, dict):
            raise ConfigError(f"cannot descend into {key!r} of {dotted!r}")
    target[keys[-1]] = value


def sweep_experiment(
    config_payload: dict, param: str, values: list, output_dir: Path | None = None
) -> tuple[list[ResultRow], dict]:
    """Run the config once per parameter value; emit combined results."""
    from .config import config_from_dict

    all_rows: list[ResultRow] = []
    summaries = {}
    base_name = config_payload.get("name", "experiment")
    for value in values:
        payload = json.loads(json.dumps(config_payload))  # deep copy
        set_config_value(payload, param, value)
        payload["name"] = f"{base_name}_{param.split('.')[-1]}{value}"
        variant = config_from_dict(payload)
        rows, summary, _ = run_experiment(variant, output_dir=output_dir)
        all_rows.extend(rows)
        summaries[str(value)] = summary
    combined = {"param": param, "values": [str(v) for v in values], "runs": summaries}
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        sweep_csv = output_dir / f"{base_name}_sweep.csv"
        write_csv(all_rows, sweep_csv)
        with open(output_dir / f"{base_name}_sweep_summary.json", "w") as handle:
            json.dump(combined, handle, indent=2, sort_keys=True)
            handle.write("\n")
    return all_rows, combined
