"""Figure rendering from fogsim aggregated CSV files.

This package is a pure consumer of the simulator's versioned ``fogsim-agg-v1``
CSV schema: it plots documented columns as-is and never recomputes metrics.
Any schema-version or column mismatch is a hard error (fail closed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


AGG_SCHEMA = "fogsim-agg-v1"


class FigureError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    """One figure id = one x axis + a fixed set of plotted metric columns."""
    fig_id: str
    x_label: str
    y_label: str
    metrics: tuple[str, ...]   # column stems; <stem>_mean / <stem>_std


FIGURES = {
    "latency_over_time": FigureSpec(
        "latency_over_time", "slot window start", "mean request latency",
        ("mean_latency",)),
    "convergence_vs_size": FigureSpec(
        "convergence_vs_size", "node count", "activations to converge",
        ("activations_to_converge",)),
    "degradation_vs_failures": FigureSpec(
        "degradation_vs_failures", "failure rate", "relative degradation",
        ("degradation",)),
    "overhead_vs_size": FigureSpec(
        "overhead_vs_size", "node count", "message count",
        ("msgs_p2p", "msgs_mem", "msgs_ilp")),
    "latency_vs_memory": FigureSpec(
        "latency_vs_memory", "shared memory episodes", "mean request latency",
        ("mean_latency",)),
}


def read_agg_csv(path) -> list[dict]:
    """Rows of an aggregated results CSV; rejects any other schema version."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != f"# {AGG_SCHEMA}":
            raise FigureError(
                f"unsupported schema header {header!r}; need '# {AGG_SCHEMA}'")
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return rows


def _series(rows: list[dict], column: str) -> np.ndarray:
    try:
        return np.array([float(r[column]) for r in rows])
    except KeyError:
        raise FigureError(f"missing column {column!r}") from None
    except (TypeError, ValueError):
        raise FigureError(f"non-numeric values in column {column!r}") from None


def render(fig_id: str, csv_path, out_path) -> None:
    """One image: a line per (controller, metric) with mean +/- std bands."""
    if fig_id not in FIGURES:
        raise FigureError(f"unknown figure id {fig_id!r}; "
                          f"known: {sorted(FIGURES)}")
    spec = FIGURES[fig_id]
    rows = read_agg_csv(csv_path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    controllers = sorted({r["controller"] for r in rows})
    for controller in controllers:
        grp = sorted((r for r in rows if r["controller"] == controller),
                     key=lambda r: float(r["axis_value"]))
        x = _series(grp, "axis_value")
        for stem in spec.metrics:
            mean = _series(grp, f"{stem}_mean")
            std = _series(grp, f"{stem}_std")
            label = controller if len(spec.metrics) == 1 \
                else f"{controller} {stem}"
            line, = ax.plot(x, mean, marker="o", markersize=3, label=label)
            ax.fill_between(x, mean - std, mean + std,
                            color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.fig_id.replace("_", " "))
    ax.legend()
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(out_path, format="png", dpi=100,
                metadata={"Software": "figure-kit"})
    plt.close(fig)
