"""Figure rendering for the report path.

Renders the benchmark views as PNG files next to the CSV: infidelity per
Trotter step, per circuit depth (Pauli rotations), and per measurement
budget (distinct linear-system Paulis).  Batch runs show one thin line
per sample and a bold batch mean.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ALGO_COLORS = {"mtqite": "tab:blue", "qite": "tab:orange"}


def _grouped(rows):
    by_run = defaultdict(list)
    for row in rows:
        by_run[(row.algorithm, row.run_id)].append(row)
    for key in by_run:
        by_run[key].sort(key=lambda r: r.step)
    return by_run


def _plot_metric(rows, x_of, xlabel, path: Path) -> Path:
    by_run = _grouped(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    per_algo_curves = defaultdict(list)
    for (algorithm, _), run_rows in sorted(by_run.items()):
        xs = [x_of(r) for r in run_rows]
        ys = [r.infidelity for r in run_rows]
        color = ALGO_COLORS.get(algorithm, "tab:gray")
        ax.plot(xs, ys, color=color, alpha=0.25, linewidth=0.9)
        per_algo_curves[algorithm].append((xs, ys))
    for algorithm, curves in sorted(per_algo_curves.items()):
        max_len = max(len(xs) for xs, _ in curves)
        if all(len(xs) == max_len for xs, _ in curves):
            xs_mean = np.mean([xs for xs, _ in curves], axis=0)
            ys_mean = np.mean([ys for _, ys in curves], axis=0)
            ax.plot(
                xs_mean,
                ys_mean,
                color=ALGO_COLORS.get(algorithm, "tab:gray"),
                linewidth=2.2,
                label=algorithm,
            )
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("infidelity")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_run_figures(rows, prefix: Path) -> dict[str, Path]:
    """Render the three benchmark views; returns name -> path."""
    prefix = Path(prefix)
    out = {}
    out["fig_step"] = _plot_metric(
        rows, lambda r: r.step, "Trotter step", prefix.with_name(prefix.name + "_vs_step.png")
    )
    out["fig_depth"] = _plot_metric(
        rows,
        lambda r: r.cum_rotations,
        "circuit depth (Pauli string rotations)",
        prefix.with_name(prefix.name + "_vs_depth.png"),
    )
    out["fig_measurements"] = _plot_metric(
        rows,
        lambda r: max(r.cum_paulis_linear, 1),
        "distinct linear-system Pauli measurements",
        prefix.with_name(prefix.name + "_vs_measurements.png"),
    )
    return out


def render_sweep_figures(rows, param: str, prefix: Path) -> dict[str, Path]:
    """Final absolute energy error per swept value, one line per algorithm."""
    prefix = Path(prefix)
    finals = defaultdict(dict)
    for row in rows:
        key = (row.algorithm, row.model)
        entry = finals[key].get(row.run_id)
        if entry is None or row.step > entry.step:
            finals[key][row.run_id] = row
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for (algorithm, model), per_run in sorted(finals.items()):
        errors = [abs(r.energy - r.exact_energy) for r in per_run.values()]
        ax.plot(
            [model] * len(errors),
            errors,
            "o",
            color=ALGO_COLORS.get(algorithm, "tab:gray"),
            label=algorithm,
            alpha=0.7,
        )
    ax.set_yscale("log")
    ax.set_xlabel(param)
    ax.set_ylabel("|E - E_exact|")
    ax.grid(True, which="both", alpha=0.3)
    handles, labels = ax.get_legend_handles_labels()
    seen = dict(zip(labels, handles))
    ax.legend(seen.values(), seen.keys())
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_sweep_error.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return {"fig_sweep": path}
