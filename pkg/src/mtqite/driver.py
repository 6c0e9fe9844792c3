"""Top-level ground-state drivers.

``run_qite_baseline`` is the standard algorithm: one full run per grid
time step size, each term's linear system measured on the sequentially
updated state, with the best-final-energy run reported and the
measurement ledger accumulating over every run.

``run_mtqite`` freezes one reference state per Trotter step, solves every
term's system for all grid values against that reference (reusing all
measurements), scores the full cartesian product of per-term time step
choices by exact energy, and advances with the argmin.  Terms marked as
site-inversion images of an already solved term are transported instead
of measured whenever the reference has a definite inversion eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

from .models import HamiltonianPartition
from .oracles import GroundSpace, fidelity
from .pauli import ObservableSum
from .qite import (
    DEFAULT_DROP_THRESHOLD,
    DEFAULT_RCOND,
    ENERGY_SCAN,
    LINEAR_SYSTEM,
    BasisSet,
    Formulation,
    MeasurementLedger,
    NormalizationBreakdownError,
    ReferenceSolver,
    TermData,
)
from .states import StateVector, UnitaryStep, apply_unitary_step, expectation
from .symmetry import site_inversion_expectation, transport_by_inversion

__all__ = [
    "TimeGrid",
    "DriverOptions",
    "StepRecord",
    "RunRecord",
    "QiteRunError",
    "run_mtqite",
    "run_qite_baseline",
    "energy_scan",
]


class QiteRunError(RuntimeError):
    """A run cannot proceed (every grid point failed for some term)."""


@dataclass(frozen=True)
class TimeGrid:
    """Sorted distinct imaginary-time step candidates."""

    values: tuple[float, ...]
    include_zero: bool = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("grid values must be nonnegative")
        if len(set(vals)) != len(vals):
            raise ValueError("grid values must be distinct")
        if tuple(sorted(vals)) != vals:
            raise ValueError("grid values must be sorted")
        if self.include_zero != (0.0 in vals):
            raise ValueError("include_zero inconsistent with the values")

    @classmethod
    def uniform(
        cls, count: int = 12, t_max: float = 0.5, include_zero: bool = True
    ) -> "TimeGrid":
        """``count`` evenly spaced values on (0, t_max], optionally plus 0."""
        if count < 1:
            raise ValueError("grid needs at least one value")
        vals = [t_max * k / count for k in range(1, count + 1)]
        if include_zero:
            vals = [0.0] + vals
        return cls(tuple(vals), include_zero)

    @classmethod
    def geometric(
        cls,
        count: int = 12,
        t_max: float = 0.5,
        t_min: float = 1e-3,
        include_zero: bool = True,
    ) -> "TimeGrid":
        """``count`` log-spaced values on [t_min, t_max], optionally plus 0.

        Imaginary-time scales shrink as a run converges, so a log-spaced
        scan lets the per-step argmin anneal the step size over decades.
        """
        if count < 1:
            raise ValueError("grid needs at least one value")
        if not 0 < t_min < t_max:
            raise ValueError("need 0 < t_min < t_max")
        if count == 1:
            vals = [t_max]
        else:
            ratio = (t_min / t_max) ** (1.0 / (count - 1))
            vals = sorted(t_max * ratio**k for k in range(count))
        if include_zero:
            vals = [0.0] + vals
        return cls(tuple(vals), include_zero)

    @property
    def nonzero(self) -> tuple[float, ...]:
        return tuple(v for v in self.values if v != 0.0)


@dataclass(frozen=True)
class DriverOptions:
    formulation: Formulation = Formulation.PAULI_ORDER2
    rcond: float = DEFAULT_RCOND
    drop_threshold: float = DEFAULT_DROP_THRESHOLD
    #: apply term 1 first (innermost); the alternative applies the last term first
    ascending_first: bool = True
    use_inversion: bool = False
    r_symmetry_tol: float = 1e-8
    ground_space: GroundSpace | None = None
    #: how e^{-i dt A[m]} is emulated: "rotation_product" (the depth metric's
    #: circuit) or "exact_generator" (diagnostic, no ordering error)
    application_mode: str = "rotation_product"


@dataclass(frozen=True)
class StepRecord:
    step: int
    dt_choices: tuple[float, ...]
    energy: float
    infidelity: float
    rotations: int
    cum_rotations: int
    cum_linear_paulis: int
    cum_energy_paulis: int
    residuals: tuple[float, ...]
    excluded: tuple[tuple[int, float], ...] = ()


@dataclass
class RunRecord:
    algorithm: str
    run_id: str
    initial_energy: float
    initial_infidelity: float
    steps: list[StepRecord]
    final_state: StateVector
    best_dt: float | None = None
    scan_candidate_ids: int = 0

    @property
    def final_energy(self) -> float:
        return self.steps[-1].energy if self.steps else self.initial_energy

    @property
    def final_infidelity(self) -> float:
        return self.steps[-1].infidelity if self.steps else self.initial_infidelity

    def validate(self) -> None:
        for earlier, later in zip(self.steps, self.steps[1:]):
            for name in ("cum_rotations", "cum_linear_paulis", "cum_energy_paulis"):
                if getattr(later, name) < getattr(earlier, name):
                    raise ValueError(f"{name} decreased between steps")


def build_term_data(
    partition: HamiltonianPartition,
    bases: list[BasisSet],
    formulation: Formulation,
) -> list[TermData]:
    """One single-unit TermData per partition term (classic granularity)."""
    if len(bases) != len(partition):
        raise ValueError("one basis required per partition term")
    return [
        TermData(m, term, basis, formulation)
        for m, (term, basis) in enumerate(zip(partition.terms, bases))
    ]


def _coerce_term_data(partition, term_data, formulation) -> list[TermData]:
    if term_data and isinstance(term_data[0], TermData):
        if len(term_data) != len(partition):
            raise ValueError("one TermData required per partition term")
        return list(term_data)
    return build_term_data(partition, list(term_data), formulation)


def _infidelity(state: StateVector, gs: GroundSpace | None) -> float:
    if gs is None:
        return float("nan")
    return max(0.0, 1.0 - fidelity(state, gs))


def energy_scan(
    reference: StateVector,
    steps_per_term: list[dict[float, UnitaryStep]],
    h_full: ObservableSum,
    ledger: MeasurementLedger | None,
    scan_ref: str,
    ascending_first: bool = True,
    application_mode: str = "rotation_product",
) -> tuple[dict[tuple[float, ...], float], tuple[float, ...]]:
    """Exact energies over the cartesian product of per-term time steps.

    Candidate states share common prefixes, so the walk applies each
    partial product once.  Every candidate's Hamiltonian strings are
    recorded under a candidate-specific reference id.  Returns the energy
    table keyed by per-term dt tuples and the argmin under the tie rule
    (lowest energy, then smallest total dt, then lexicographic tuple).
    """
    n_terms = len(steps_per_term)
    if any(not table for table in steps_per_term):
        raise QiteRunError("energy scan requires at least one step per term")
    order = list(range(n_terms)) if ascending_first else list(range(n_terms))[::-1]
    h_keys = h_full.keys
    energies: dict[tuple[float, ...], float] = {}

    def walk(pos: int, state: StateVector, chosen: dict[int, float]) -> None:
        if pos == n_terms:
            combo = tuple(chosen[m] for m in range(n_terms))
            cid = scan_ref + "/" + ",".join(f"{v:.17g}" for v in combo)
            value = expectation(state, h_full).real
            if ledger is not None:
                ledger.record(ENERGY_SCAN, cid, h_keys)
            energies[combo] = float(value)
            return
        m = order[pos]
        for dt in sorted(steps_per_term[m]):
            chosen[m] = dt
            walk(
                pos + 1,
                apply_unitary_step(state, steps_per_term[m][dt], application_mode),
                chosen,
            )
        del chosen[m]

    walk(0, reference, {})
    best = min(energies, key=lambda combo: (energies[combo], sum(combo), combo))
    return energies, best


def run_mtqite(
    partition: HamiltonianPartition,
    bases: list[BasisSet],
    initial: StateVector,
    grid: TimeGrid,
    n_steps: int,
    opts: DriverOptions = DriverOptions(),
    ledger: MeasurementLedger | None = None,
    run_id: str = "mtqite",
) -> RunRecord:
    ledger = ledger if ledger is not None else MeasurementLedger()
    term_data = _coerce_term_data(partition, bases, opts.formulation)
    state = initial
    records: list[StepRecord] = []
    cum_rot = 0
    lin0 = ledger.count(LINEAR_SYSTEM)
    en0 = ledger.count(ENERGY_SCAN)
    record = RunRecord(
        algorithm="mtqite",
        run_id=run_id,
        initial_energy=expectation(initial, partition.full).real,
        initial_infidelity=_infidelity(initial, opts.ground_space),
        steps=[],
        final_state=initial,
    )

    for step_idx in range(1, n_steps + 1):
        ref_id = f"{run_id}/t{step_idx}"
        solver = ReferenceSolver(state, ref_id, ledger)
        r_definite = False
        if opts.use_inversion and partition.symmetry_links:
            r_value = site_inversion_expectation(state)
            r_definite = abs(abs(r_value) - 1.0) <= opts.r_symmetry_tol

        steps_per_term: list[dict[float, UnitaryStep]] = [dict() for _ in term_data]
        excluded: list[tuple[int, float]] = []
        for m, data in enumerate(term_data):
            link = partition.symmetry_links.get(m)
            if link is not None and opts.use_inversion and r_definite and steps_per_term[link[0]]:
                source_steps = steps_per_term[link[0]]
                steps_per_term[m] = {
                    dt: transport_by_inversion(src, partition.n_qubits, term_index=m)
                    for dt, src in source_steps.items()
                }
                continue
            for dt in grid.values:
                if dt == 0.0:
                    steps_per_term[m][dt] = UnitaryStep(term_index=m, dt=0.0, rotations=())
                    continue
                try:
                    steps_per_term[m][dt] = solver.step(
                        data, dt, opts.rcond, opts.drop_threshold
                    )
                except NormalizationBreakdownError:
                    excluded.append((m, dt))
            if not steps_per_term[m]:
                raise QiteRunError(
                    f"every grid point failed for term {m} at step {step_idx}"
                )

        energies, best = energy_scan(
            state,
            steps_per_term,
            partition.full,
            ledger,
            scan_ref=f"{ref_id}/scan",
            ascending_first=opts.ascending_first,
            application_mode=opts.application_mode,
        )
        record.scan_candidate_ids += len(energies)
        winners = [steps_per_term[m][best[m]] for m in range(len(term_data))]
        applied = winners if opts.ascending_first else winners[::-1]
        for ustep in applied:
            state = apply_unitary_step(state, ustep, opts.application_mode)
        rotations = sum(u.rotation_count for u in winners)
        cum_rot += rotations
        records.append(
            StepRecord(
                step=step_idx,
                dt_choices=best,
                energy=energies[best],
                infidelity=_infidelity(state, opts.ground_space),
                rotations=rotations,
                cum_rotations=cum_rot,
                cum_linear_paulis=ledger.count(LINEAR_SYSTEM) - lin0,
                cum_energy_paulis=ledger.count(ENERGY_SCAN) - en0,
                residuals=tuple(u.residual for u in winners),
                excluded=tuple(excluded),
            )
        )

    record.steps = records
    record.final_state = state
    record.validate()
    return record


def run_qite_baseline(
    partition: HamiltonianPartition,
    bases: list[BasisSet],
    initial: StateVector,
    grid: TimeGrid,
    n_steps: int,
    opts: DriverOptions = DriverOptions(),
    ledger: MeasurementLedger | None = None,
    run_id: str = "qite",
) -> RunRecord:
    """Optimum-time-step QITE over the nonzero grid values.

    The zero candidate evolves nothing and needs no tomography, so only
    nonzero values launch runs.  Cost columns use lockstep accounting:
    the cumulative ledger at step k sums every run's measurements up to
    its own step k, while rotation counts belong to the reported (best)
    run's circuit alone.
    """
    ledger = ledger if ledger is not None else MeasurementLedger()
    if not grid.nonzero:
        raise QiteRunError("baseline QITE needs at least one nonzero grid value")
    term_data = _coerce_term_data(partition, bases, opts.formulation)
    initial_energy = expectation(initial, partition.full).real
    initial_infid = _infidelity(initial, opts.ground_space)

    per_run: dict[float, dict] = {}
    for dt in grid.nonzero:
        run_ref = f"{run_id}/dt{dt:.17g}"
        state = initial
        rows = []
        cum_rot = 0
        failed = False
        for step_idx in range(1, n_steps + 1):
            lin_before = ledger.count(LINEAR_SYSTEM)
            en_before = ledger.count(ENERGY_SCAN)
            residuals = []
            rotations = 0
            for m, data in enumerate(term_data):
                term_residual_sq = 0.0
                for u_idx, unit in enumerate(data.units):
                    solver = ReferenceSolver(
                        state, f"{run_ref}/t{step_idx}/m{m}/u{u_idx}", ledger
                    )
                    sub = TermData(m, unit.operator, units=[unit])
                    try:
                        ustep = solver.step(sub, dt, opts.rcond, opts.drop_threshold)
                    except NormalizationBreakdownError:
                        failed = True
                        break
                    state = apply_unitary_step(state, ustep, opts.application_mode)
                    term_residual_sq += ustep.residual ** 2
                    rotations += ustep.rotation_count
                if failed:
                    break
                residuals.append(term_residual_sq ** 0.5)
            if failed:
                break
            energy_solver = ReferenceSolver(state, f"{run_ref}/t{step_idx}", ledger)
            energy = energy_solver.energy(partition.full)
            cum_rot += rotations
            rows.append(
                {
                    "step": step_idx,
                    "energy": energy,
                    "infidelity": _infidelity(state, opts.ground_space),
                    "rotations": rotations,
                    "cum_rotations": cum_rot,
                    "residuals": tuple(residuals),
                    "lin_delta": ledger.count(LINEAR_SYSTEM) - lin_before,
                    "en_delta": ledger.count(ENERGY_SCAN) - en_before,
                }
            )
        if rows and not failed:
            per_run[dt] = {"rows": rows, "state": state}

    if not per_run:
        raise QiteRunError("every grid time step size failed")

    best_dt = min(per_run, key=lambda dt: (per_run[dt]["rows"][-1]["energy"], dt))
    best_rows = per_run[best_dt]["rows"]
    records = []
    for k, row in enumerate(best_rows):
        lin_cum = sum(
            sum(r["lin_delta"] for r in info["rows"][: k + 1])
            for info in per_run.values()
        )
        en_cum = sum(
            sum(r["en_delta"] for r in info["rows"][: k + 1])
            for info in per_run.values()
        )
        records.append(
            StepRecord(
                step=row["step"],
                dt_choices=(best_dt,) * len(term_data),
                energy=row["energy"],
                infidelity=row["infidelity"],
                rotations=row["rotations"],
                cum_rotations=row["cum_rotations"],
                cum_linear_paulis=lin_cum,
                cum_energy_paulis=en_cum,
                residuals=row["residuals"],
            )
        )

    record = RunRecord(
        algorithm="qite",
        run_id=run_id,
        initial_energy=initial_energy,
        initial_infidelity=initial_infid,
        steps=records,
        final_state=per_run[best_dt]["state"],
        best_dt=best_dt,
    )
    record.validate()
    return record
