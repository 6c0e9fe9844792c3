"""Config handling, initial-state batches, the experiment runner, and the CLI."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from mtqite.cli import main as cli_main
from mtqite.config import ConfigError, config_from_dict, load_config
from mtqite.experiments import (
    CSV_COLUMNS,
    build_problem,
    derived_quantities,
    generate_initial_batch,
    run_experiment,
)
from mtqite.models import build_xxz
from mtqite.states import StateVector
from mtqite.symmetry import find_z2_symmetries, stabilizer_expectations

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def toy_payload(**overrides):
    payload = {
        "name": "unit_toy",
        "seed": 3,
        "model": {"kind": "tfim", "n_sites": 2, "h_over_j": 1.0},
        "partition": {"kind": "trivial"},
        "basis": "domain_full",
        "grid": {"count": 6, "t_max": 0.5, "include_zero": True},
        "trotter_steps": 6,
        "algorithm": "mtqite",
        "initial": {"kind": "bitstring", "bitstring": "00"},
        "output": {"figures": False},
    }
    payload.update(overrides)
    return payload


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="model.kind"):
        config_from_dict(toy_payload(model={"kind": "bogus"}))
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict(toy_payload(bogus_key=1))
    with pytest.raises(ConfigError, match="grid.count"):
        config_from_dict(toy_payload(grid={"count": 0}))
    with pytest.raises(ConfigError, match="bitstring"):
        config_from_dict(toy_payload(initial={"kind": "bitstring"}))
    with pytest.raises(ConfigError, match="pool"):
        config_from_dict(toy_payload(basis="pool"))


def test_committed_configs_are_valid():
    for path in sorted(CONFIG_DIR.glob("*.yaml")):
        config = load_config(path)
        assert config.name


def test_symmetric_batch_lands_in_sector():
    h = build_xxz(4, 1.0)
    group = find_z2_symmetries(h)
    config = config_from_dict(
        toy_payload(
            model={"kind": "xxz", "n_sites": 4, "j": 1.0},
            initial={
                "kind": "symmetric_batch",
                "count": 5,
                "x_prob": 0.5,
                "h_prob": 0.5,
                "projection_beta": 10.0,
            },
        )
    )
    states = generate_initial_batch(config, group, 4)
    assert len(states) == 5
    for state in states:
        np.testing.assert_allclose(
            stabilizer_expectations(state, group), 1.0, atol=1e-8
        )
    again = generate_initial_batch(config, group, 4)
    for a, b in zip(states, again):
        assert np.array_equal(a.amplitudes, b.amplitudes)


def test_symmetric_batch_zero_probs_projects_vacuum():
    h = build_xxz(4, 1.0)
    group = find_z2_symmetries(h)
    config = config_from_dict(
        toy_payload(
            model={"kind": "xxz", "n_sites": 4, "j": 1.0},
            initial={
                "kind": "symmetric_batch",
                "count": 2,
                "x_prob": 0.0,
                "h_prob": 0.0,
                "projection_beta": 8.0,
            },
        )
    )
    states = generate_initial_batch(config, group, 4)
    assert np.array_equal(states[0].amplitudes, states[1].amplitudes)


def test_toy_experiment_converges(tmp_path):
    config = config_from_dict(
        toy_payload(grid={"count": 12, "t_max": 0.5, "include_zero": True},
                    trotter_steps=10)
    )
    rows, summary, paths = run_experiment(config, output_dir=tmp_path)
    finals = [r for r in rows if r.step == config.trotter_steps]
    assert finals and all(r.infidelity < 1e-4 for r in finals)
    assert paths["csv"].exists()
    assert paths["summary"].exists()


def test_csv_stats_agree_with_summary(tmp_path):
    config = config_from_dict(
        toy_payload(
            model={"kind": "xxz", "n_sites": 3, "j": 1.0},
            initial={
                "kind": "symmetric_batch",
                "count": 4,
                "x_prob": 0.5,
                "h_prob": 0.5,
                "projection_beta": 10.0,
            },
            basis="domain_z2",
            trotter_steps=3,
        )
    )
    rows, summary, paths = run_experiment(config, output_dir=tmp_path)
    with open(paths["csv"]) as handle:
        parsed = list(csv.DictReader(handle))
    assert set(parsed[0].keys()) == set(CSV_COLUMNS)
    for block in summary["algorithms"].values():
        for entry in block["per_step"]:
            step_rows = [
                float(r["infidelity"])
                for r in parsed
                if int(r["step"]) == entry["step"]
            ]
            assert float(np.mean(step_rows)) == entry["mean_infidelity"]
            assert float(np.std(step_rows)) == entry["std_infidelity"]


def test_reproducible_csv(tmp_path):
    config = config_from_dict(
        toy_payload(
            initial={
                "kind": "symmetric_batch",
                "count": 2,
                "x_prob": 0.5,
                "h_prob": 0.5,
                "projection_beta": 10.0,
            },
            algorithm="both",
            trotter_steps=3,
        )
    )
    def strip_wall(path):
        with open(path) as handle:
            return [line.rsplit(",", 1)[0] for line in handle]

    run_experiment(config, output_dir=tmp_path / "a")
    run_experiment(config, output_dir=tmp_path / "b")
    assert strip_wall(tmp_path / "a" / "unit_toy.csv") == strip_wall(
        tmp_path / "b" / "unit_toy.csv"
    )


def test_check_and_run_agree_on_derived(tmp_path):
    config = config_from_dict(toy_payload())
    problem = build_problem(config)
    derived = derived_quantities(problem)
    _, summary, _ = run_experiment(config, output_dir=tmp_path)
    assert summary["derived"] == derived


def test_infidelity_floor(tmp_path):
    config = config_from_dict(toy_payload(trotter_steps=40))
    rows, _, _ = run_experiment(config, output_dir=tmp_path)
    assert all(r.infidelity >= 1e-16 for r in rows)


def test_cli_run_and_check(tmp_path, capsys):
    config_path = tmp_path / "toy.yaml"
    config_path.write_text(yaml.safe_dump(toy_payload()))
    assert cli_main(["check", str(config_path)]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["n_qubits"] == 2
    assert cli_main(["run", str(config_path), "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "unit_toy.csv").exists()


def test_cli_models(capsys):
    assert cli_main(["models"]) == 0
    out = capsys.readouterr().out
    for name in ("tfim", "xxz", "hubbard", "molecule"):
        assert name in out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: {kind: bogus}\n")
    assert cli_main(["check", str(bad)]) == 1
    assert cli_main(["check", str(tmp_path / "missing.yaml")]) == 1


def test_cli_seed_override(tmp_path):
    payload = toy_payload(
        initial={
            "kind": "symmetric_batch",
            "count": 1,
            "x_prob": 0.5,
            "h_prob": 0.5,
            "projection_beta": 10.0,
        },
        trotter_steps=2,
    )
    config_path = tmp_path / "toy.yaml"
    config_path.write_text(yaml.safe_dump(payload))
    assert (
        cli_main(["--seed", "9", "run", str(config_path), "--output-dir", str(tmp_path / "s9")])
        == 0
    )
    assert (
        cli_main(["--seed", "10", "run", str(config_path), "--output-dir", str(tmp_path / "s10")])
        == 0
    )
    a = (tmp_path / "s9" / "unit_toy.csv").read_text()
    b = (tmp_path / "s10" / "unit_toy.csv").read_text()
    assert a != b  # different seeds draw different initial gates


def test_cli_sweep_and_plot(tmp_path):
    payload = toy_payload(trotter_steps=2, algorithm="mtqite")
    payload["output"] = {"figures": False}
    config_path = tmp_path / "toy.yaml"
    config_path.write_text(yaml.safe_dump(payload))
    code = cli_main(
        [
            "sweep",
            str(config_path),
            "--param",
            "model.h_over_j",
            "--values",
            "0.5,2.0",
            "--output-dir",
            str(tmp_path / "sweep"),
        ]
    )
    assert code == 0
    sweep_csv = tmp_path / "sweep" / "unit_toy_sweep.csv"
    assert sweep_csv.exists()
    with open(sweep_csv) as handle:
        parsed = list(csv.DictReader(handle))
    assert {r["model"] for r in parsed} == {"tfim-n2-hj0.5", "tfim-n2-hj2"}
    assert cli_main(["plot", str(sweep_csv)]) == 0
    assert (tmp_path / "sweep" / "unit_toy_sweep_vs_step.png").exists()


def test_check_reports_reduced_basis_sizes():
    """Derived quantities match the symmetry module's own reduction."""
    from mtqite.symmetry import find_z2_symmetries, reduce_basis
    from mtqite.models import build_xxz

    config = load_config(CONFIG_DIR / "fig3a_xxz8.yaml")
    problem = build_problem(config)
    derived = derived_quantities(problem)
    group = find_z2_symmetries(build_xxz(8, 1.0))
    for sizes, domain in zip(derived["basis_sizes"], problem.partition.domains):
        assert sizes == [len(reduce_basis(domain, group, 8))]
    assert derived["basis_sizes"] == [[255], [255]]


def test_hubbard_sweep_rows(tmp_path):
    """Repulsion sweep emits rows per value (trimmed for test speed)."""
    import yaml as yaml_mod
    from mtqite.experiments import sweep_experiment

    payload = yaml_mod.safe_load((CONFIG_DIR / "fig2_hubbard3.yaml").read_text())
    payload["trotter_steps"] = 2
    payload["grid"] = {"count": 3, "t_max": 0.5, "include_zero": True}
    payload["algorithm"] = "mtqite"
    payload["output"] = {"figures": False}
    rows, combined = sweep_experiment(payload, "model.u", [2, 8], output_dir=tmp_path)
    models = {r.model for r in rows}
    assert models == {"hubbard-n3-u2", "hubbard-n3-u8"}
    assert (tmp_path / "fig2_hubbard3_sweep.csv").exists()


def test_output_dir_env_var(tmp_path, monkeypatch):
    from mtqite.config import OUTPUT_DIR_ENV

    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "envout"))
    config = config_from_dict(toy_payload(trotter_steps=2))
    _, _, paths = run_experiment(config)
    assert paths["csv"].parent == tmp_path / "envout"
