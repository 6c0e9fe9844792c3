"""Noiseless emulation of QITE and multiple-time QITE ground-state preparation."""

from .driver import (
    DriverOptions,
    QiteRunError,
    RunRecord,
    StepRecord,
    TimeGrid,
    energy_scan,
    run_mtqite,
    run_qite_baseline,
)
from .fcidump import FcidumpData, FcidumpError, parse_fcidump
from .fermion import FermionOp, OperatorPool, build_uccgsd_pool, jordan_wigner
from .models import (
    HamiltonianPartition,
    PartitionSpec,
    build_hubbard,
    build_tfim,
    build_xxz,
    make_partition,
    molecular_hamiltonian,
)
from .oracles import GroundSpace, exact_ground, exact_ite, fidelity
from .pauli import ObservableSum, PauliString
from .qite import (
    BasisSet,
    Formulation,
    MeasurementLedger,
    NormalizationBreakdownError,
    QiteLinearSystem,
    ReferenceSolver,
    SolveUnit,
    TermData,
    build_system,
    equivalence_check,
    qite_step,
    solve,
)
from .states import (
    StateVector,
    UnitaryStep,
    apply_pauli_rotation,
    apply_unitary_step,
    expectation,
)
from .symmetry import (
    SymmetryGroup,
    find_z2_symmetries,
    reduce_basis,
    transport_by_inversion,
)

__version__ = "0.1.0"
