"""Experiment configuration: YAML schema, validation, defaults.

A config is one YAML document with nested sections.  The full schema with
defaults (see also ``configs/`` for working examples):

.. code-block:: yaml

    name: fig3b_tfim6          # run identifier, used in file names
    seed: 7                    # RNG seed for initial-state batches
    model:
      kind: tfim               # tfim | xxz | hubbard | molecule
      n_sites: 6               # spin chains / hubbard
      h_over_j: 1.0            # tfim transverse field
      j: 1.0                   # xxz ZZ coupling
      u: 4.0                   # hubbard repulsion
      fcidump: path/to/file    # molecule integrals
    partition:
      kind: named              # trivial | even_odd | explicit |
                               # greedy_commuting | named
      name: tfim_3p            # named: tfim_3p, tfim_2p, xxz_halves,
                               # chem_frontier_3p, chem_frontier_2p
      groups: [[0, 1], [2]]    # explicit: canonical term indices
      n_groups: 3              # greedy_commuting
    domain_size: 4             # int or per-term list; null = minimal window
    basis: domain_z2           # domain_full | domain_z2 | pool
    solve_granularity: term    # term | local (one system per local cluster
                               # on a D-qubit neighbourhood)
    formulation: pauli_order2  # pauli_order1 | pauli_order2 |
                               # antihermitian_order2
    sector: [1, 1]             # stabilizer eigenvalues, default all +1
    use_inversion_symmetry: true
    grid:
      count: 12
      t_max: 0.5
      include_zero: true
      spacing: uniform         # uniform | geometric
      t_min: 0.001             # geometric grids only
    trotter_steps: 10
    qite_trotter_steps: 10     # optional baseline override
    algorithm: both            # qite | mtqite | both
    initial:
      kind: symmetric_batch    # bitstring | hartree_fock | symmetric_batch
      bitstring: "010101"
      count: 25
      x_prob: 0.5
      h_prob: 0.5
      projection_beta: 10.0
    rcond: 1.0e-8
    drop_threshold: 1.0e-10
    ascending_first: true      # term 1 innermost in the ansatz product
    output:
      directory: results       # default $MTQITE_OUTPUT_DIR or ./results
      figures: true            # render PNG figures next to the CSV
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

import yaml

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "config_from_dict"]

OUTPUT_DIR_ENV = "MTQITE_OUTPUT_DIR"

MODEL_KINDS = ("tfim", "xxz", "hubbard", "molecule")
PARTITION_KINDS = ("trivial", "even_odd", "explicit", "greedy_commuting", "named")
PARTITION_NAMES = (
    "tfim_3p",
    "tfim_2p",
    "xxz_halves",
    "chem_frontier_3p",
    "chem_frontier_2p",
)
BASIS_KINDS = ("domain_full", "domain_z2", "pool")
FORMULATIONS = ("pauli_order1", "pauli_order2", "antihermitian_order2")
ALGORITHMS = ("qite", "mtqite", "both")
INITIAL_KINDS = ("bitstring", "hartree_fock", "symmetric_batch")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ModelSpec:
    kind: str = "tfim"
    n_sites: int = 6
    h_over_j: float = 1.0
    j: float = 1.0
    u: float = 4.0
    fcidump: str | None = None

    @property
    def tag(self) -> str:
        if self.kind == "tfim":
            return f"tfim-n{self.n_sites}-hj{self.h_over_j:g}"
        if self.kind == "xxz":
            return f"xxz-n{self.n_sites}-j{self.j:g}"
        if self.kind == "hubbard":
            return f"hubbard-n{self.n_sites}-u{self.u:g}"
        return f"molecule-{Path(self.fcidump).stem}"


@dataclass
class PartitionConfig:
    kind: str = "trivial"
    name: str | None = None
    groups: list | None = None
    n_groups: int | None = None


@dataclass
class GridSpec:
    count: int = 12
    t_max: float = 0.5
    include_zero: bool = True
    #: "uniform" or "geometric" (log-spaced down to t_min)
    spacing: str = "uniform"
    t_min: float = 1e-3


@dataclass
class InitialSpec:
    kind: str = "bitstring"
    bitstring: str | None = None
    count: int = 1
    x_prob: float = 0.5
    h_prob: float = 0.5
    projection_beta: float = 10.0


@dataclass
class OutputSpec:
    directory: str | None = None
    figures: bool = True

    def resolved_directory(self) -> Path:
        if self.directory:
            return Path(self.directory)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "results"))


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    model: ModelSpec = field(default_factory=ModelSpec)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    domain_size: int | list | None = None
    basis: str = "domain_z2"
    #: "term": one linear system per partition term on its own domain;
    #: "local": one system per local term (strings sharing a support) on a
    #: D-qubit neighbourhood around it, all sharing the term's time variable
    solve_granularity: str = "term"
    formulation: str = "pauli_order2"
    sector: list | None = None
    use_inversion_symmetry: bool = False
    grid: GridSpec = field(default_factory=GridSpec)
    trotter_steps: int = 10
    qite_trotter_steps: int | None = None
    algorithm: str = "both"
    initial: InitialSpec = field(default_factory=InitialSpec)
    rcond: float = 1e-8
    drop_threshold: float = 1e-10
    ascending_first: bool = True
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self) -> dict:
        return asdict(self)


def _build_section(cls, payload, context: str):
    if payload is None:
        return cls()
    if not isinstance(payload, dict):
        raise ConfigError(f"{context} must be a mapping")
    valid = {f for f in cls.__dataclass_fields__}
    unknown = set(payload) - valid
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return cls(**payload)


def config_from_dict(payload: dict) -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise ConfigError("config root must be a mapping")
    valid = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(payload) - valid
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(payload)
    kwargs["model"] = _build_section(ModelSpec, payload.get("model"), "model")
    kwargs["partition"] = _build_section(
        PartitionConfig, payload.get("partition"), "partition"
    )
    kwargs["grid"] = _build_section(GridSpec, payload.get("grid"), "grid")
    kwargs["initial"] = _build_section(InitialSpec, payload.get("initial"), "initial")
    kwargs["output"] = _build_section(OutputSpec, payload.get("output"), "output")
    config = ExperimentConfig(**kwargs)
    validate_config(config)
    return config


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    with open(path) as handle:
        payload = yaml.safe_load(handle)
    payload = payload or {}
    model = payload.get("model") or {}
    fcidump = model.get("fcidump")
    if fcidump and not Path(fcidump).is_absolute():
        candidate = path.parent / fcidump
        if candidate.exists():
            model["fcidump"] = str(candidate.resolve())
    return config_from_dict(payload)


def validate_config(config: ExperimentConfig) -> None:
    m = config.model
    if m.kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {m.kind!r}")
    if m.kind in ("tfim", "xxz") and m.n_sites < 2:
        raise ConfigError("spin chains need n_sites >= 2")
    if m.kind == "hubbard" and m.n_sites < 1:
        raise ConfigError("hubbard needs n_sites >= 1")
    if m.kind == "molecule":
        if not m.fcidump:
            raise ConfigError("molecule model requires model.fcidump")
        if not Path(m.fcidump).exists():
            raise ConfigError(f"fcidump file {m.fcidump} does not exist")
    p = config.partition
    if p.kind not in PARTITION_KINDS:
        raise ConfigError(f"partition.kind must be one of {PARTITION_KINDS}")
    if p.kind == "named":
        if p.name not in PARTITION_NAMES:
            raise ConfigError(f"partition.name must be one of {PARTITION_NAMES}")
    if p.kind == "explicit" and not p.groups:
        raise ConfigError("explicit partition requires partition.groups")
    if p.kind == "greedy_commuting" and not p.n_groups:
        raise ConfigError("greedy_commuting partition requires partition.n_groups")
    if config.basis not in BASIS_KINDS:
        raise ConfigError(f"basis must be one of {BASIS_KINDS}")
    if config.solve_granularity not in ("term", "local"):
        raise ConfigError("solve_granularity must be 'term' or 'local'")
    if config.solve_granularity == "local" and config.basis == "pool":
        raise ConfigError("the pool basis solves whole terms; use solve_granularity term")
    if config.formulation not in FORMULATIONS:
        raise ConfigError(f"formulation must be one of {FORMULATIONS}")
    if config.basis == "pool" and config.formulation != "antihermitian_order2":
        raise ConfigError("the pool basis requires the anti-hermitian formulation")
    if config.algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
    if config.grid.count < 1:
        raise ConfigError("grid.count must be at least 1")
    if config.grid.t_max <= 0:
        raise ConfigError("grid.t_max must be positive")
    if config.grid.spacing not in ("uniform", "geometric"):
        raise ConfigError("grid.spacing must be 'uniform' or 'geometric'")
    if config.grid.spacing == "geometric" and not 0 < config.grid.t_min < config.grid.t_max:
        raise ConfigError("geometric grids need 0 < t_min < t_max")
    if config.trotter_steps < 1:
        raise ConfigError("trotter_steps must be at least 1")
    i = config.initial
    if i.kind not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
    if i.kind == "bitstring" and not i.bitstring:
        raise ConfigError("initial.kind bitstring requires initial.bitstring")
    if i.kind == "symmetric_batch":
        if i.count < 1:
            raise ConfigError("initial.count must be at least 1")
        for prob_name in ("x_prob", "h_prob"):
            prob = getattr(i, prob_name)
            if not 0.0 <= prob <= 1.0:
                raise ConfigError(f"initial.{prob_name} must be in [0, 1]")
    if config.rcond <= 0 or config.drop_threshold < 0:
        raise ConfigError("rcond must be positive and drop_threshold nonnegative")
