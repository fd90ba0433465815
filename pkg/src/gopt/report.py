"""Bench report: delimited output plus a rendered comparison figure."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


@dataclass
class BenchRow:
    label: str
    kind: str  # optimized | random | forced
    est_cost: float
    runtime_s: float
    intermediate_rows: int
    result_rows: int


def write_bench_csv(rows: list[BenchRow], path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["plan", "kind", "est_cost", "runtime_s", "intermediate_rows", "result_rows"]
        )
        for r in rows:
            writer.writerow(
                [r.label, r.kind, f"{r.est_cost:g}", f"{r.runtime_s:.6f}",
                 r.intermediate_rows, r.result_rows]
            )


def render_bench_figure(rows: list[BenchRow], path: str, title: str = ""):
    """Scatter the optimized plan as an x marker against the alternatives."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.8))
    for ax, attr, ylabel in (
        (axes[0], "runtime_s", "runtime (s)"),
        (axes[1], "intermediate_rows", "intermediate rows"),
    ):
        for i, r in enumerate(rows):
            value = getattr(r, attr)
            if r.kind == "optimized":
                ax.scatter([i], [value], marker="x", s=90, color="black", zorder=3,
                           label="optimized" if i == 0 else None)
            else:
                ax.scatter([i], [value], marker="o", s=50, facecolors="none",
                           edgecolors="red", zorder=2)
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels([r.label for r in rows], rotation=45, ha="right", fontsize=7)
        ax.set_ylabel(ylabel)
        if any(getattr(r, attr) > 0 for r in rows):
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_bench_report(rows: list[BenchRow], out_dir: str, title: str = "") -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "bench.csv"),
        "figure": os.path.join(out_dir, "bench.png"),
    }
    write_bench_csv(rows, paths["csv"])
    render_bench_figure(rows, paths["figure"], title=title)
    return paths
