"""Command-line front door.

Subcommands:

* ``run <config.yaml>`` executes an experiment and writes CSV + JSON
  (+ PNG figures unless disabled in the config).
* ``check <config.yaml>`` validates the config and prints the derived
  quantities (basis sizes, measurement-budget predictions) as JSON.
* ``models`` lists the model builders and their parameters.
* ``sweep <config.yaml> --param model.u --values 2,4,8`` runs the config
  once per value and emits combined results.
* ``plot <results.csv>`` re-renders the figures from an existing CSV.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .config import ConfigError, OUTPUT_DIR_ENV, config_from_dict, load_config

MODELS_TABLE = [
    ("tfim", "transverse-field Ising chain", "n_sites, h_over_j"),
    ("xxz", "XXZ Heisenberg chain", "n_sites, j"),
    ("hubbard", "fermionic Hubbard chain (Jordan-Wigner)", "n_sites, u"),
    ("molecule", "electronic Hamiltonian from an FCIDUMP file", "fcidump"),
]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtqite",
        description="Noiseless emulation of QITE and multiple-time QITE.",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", type=Path)
    run_p.add_argument(
        "--output-dir", type=Path, default=None,
        help=f"output directory (default: config, then ${OUTPUT_DIR_ENV}, then ./results)",
    )

    check_p = sub.add_parser("check", help="validate a config and print derived quantities")
    check_p.add_argument("config", type=Path)

    sub.add_parser("models", help="list model builders and parameters")

    sweep_p = sub.add_parser("sweep", help="run a config over a parameter sweep")
    sweep_p.add_argument("config", type=Path)
    sweep_p.add_argument("--param", required=True, help="dotted config path, e.g. model.u")
    sweep_p.add_argument(
        "--values", required=True,
        help="comma-separated values; each parsed as JSON when possible",
    )
    sweep_p.add_argument("--output-dir", type=Path, default=None)

    plot_p = sub.add_parser("plot", help="render figures from a result CSV")
    plot_p.add_argument("csv", type=Path)
    plot_p.add_argument("--prefix", type=Path, default=None)
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    from .experiments import run_experiment

    rows, summary, paths = run_experiment(config, output_dir=args.output_dir)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    for algorithm, block in summary["algorithms"].items():
        best = block["best_sample"]
        print(
            f"{algorithm}: runs={block['runs']} "
            f"mean final infidelity={block['mean_final_infidelity']:.3e} "
            f"best={best['final_infidelity']:.3e} "
            f"linear paulis={block['totals']['linear_paulis']}"
        )
    return 0


def _cmd_check(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    from .experiments import build_problem, derived_quantities

    problem = build_problem(config)
    print(json.dumps(derived_quantities(problem), indent=2, sort_keys=True))
    return 0


def _cmd_models(_args) -> int:
    width = max(len(name) for name, _, _ in MODELS_TABLE)
    for name, description, params in MODELS_TABLE:
        print(f"{name:<{width}}  {description}  (params: {params})")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config) as handle:
        payload = yaml.safe_load(handle) or {}
    if args.seed is not None:
        payload["seed"] = args.seed
    values = [_parse_value(v) for v in args.values.split(",")]
    from .experiments import sweep_experiment

    base = config_from_dict(json.loads(json.dumps(payload)))  # validate early
    out_dir = args.output_dir or base.output.resolved_directory()
    rows, _combined = sweep_experiment(payload, args.param, values, output_dir=out_dir)
    if base.output.figures:
        from .plotting import render_sweep_figures

        render_sweep_figures(rows, args.param, Path(out_dir) / payload.get("name", "sweep"))
    print(f"sweep over {args.param} complete: {len(values)} runs, {len(rows)} rows")
    return 0


def _cmd_plot(args) -> int:
    import csv as csv_mod

    from .experiments import ResultRow
    from .plotting import render_run_figures

    rows = []
    with open(args.csv) as handle:
        for record in csv_mod.DictReader(handle):
            rows.append(
                ResultRow(
                    run_id=record["run_id"],
                    algorithm=record["algorithm"],
                    model=record["model"],
                    step=int(record["step"]),
                    dt_choices=tuple(
                        float(v) for v in record["dt_choices"].split("|") if v
                    ),
                    energy=float(record["energy"]),
                    exact_energy=float(record["exact_energy"]),
                    infidelity=float(record["infidelity"]),
                    cum_rotations=int(record["cum_rotations"]),
                    cum_paulis_linear=int(record["cum_paulis_linear"]),
                    cum_paulis_energy=int(record["cum_paulis_energy"]),
                    wall_time_s=float(record["wall_time_s"]),
                )
            )
    prefix = args.prefix or args.csv.with_suffix("")
    paths = render_run_figures(rows, prefix)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "check": _cmd_check,
        "models": _cmd_models,
        "sweep": _cmd_sweep,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
