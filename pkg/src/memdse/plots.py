"""Static figure rendering for sweep reports.

Three figures accompany the delimited output: the L1 x LLC normalized
energy heatmap, the baseline-versus-best energy breakdown bars, and the
energy/latency scatter with the Pareto front highlighted. All figures
render headlessly to files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sweep import SweepGrid, SweepPoint

_COMPONENTS = ("e_l1", "e_llc", "e_dram", "e_core", "e_leakage")
_COMPONENT_LABELS = ("L1", "LLC", "DRAM", "core", "leakage")


def _cap_label(n_bytes: int) -> str:
    if n_bytes % (1024 * 1024) == 0:
        return f"{n_bytes // (1024 * 1024)}MB"
    return f"{n_bytes // 1024}KB"


def render_heatmap(points: list[SweepPoint], grid: SweepGrid, path: str) -> None:
    mat = np.zeros((len(grid.l1_points), len(grid.llc_points)))
    for p in points:
        i = grid.l1_points.index(p.l1)
        j = grid.llc_points.index(p.llc)
        mat[i, j] = p.normalized_energy
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    im = ax.imshow(mat, cmap="viridis_r", aspect="auto")
    ax.set_xticks(range(len(grid.llc_points)),
                  [_cap_label(v) for v in grid.llc_points])
    ax.set_yticks(range(len(grid.l1_points)),
                  [_cap_label(v) for v in grid.l1_points])
    ax.set_xlabel("LLC capacity")
    ax.set_ylabel("L1 capacity")
    ax.set_title("Normalized total energy")
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            ax.text(j, i, f"{mat[i, j]:.2f}", ha="center", va="center",
                    color="white" if mat[i, j] > mat.mean() else "black",
                    fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_breakdown(baseline: SweepPoint, best: SweepPoint, path: str) -> None:
    labels = [f"baseline\n({_cap_label(baseline.l1)}, {_cap_label(baseline.llc)})",
              f"best\n({_cap_label(best.l1)}, {_cap_label(best.llc)})"]
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    bottoms = [0.0, 0.0]
    for comp, label in zip(_COMPONENTS, _COMPONENT_LABELS):
        vals = [getattr(baseline.energy, comp), getattr(best.energy, comp)]
        ax.bar(labels, vals, bottom=bottoms, label=label)
        bottoms = [b + v for b, v in zip(bottoms, vals)]
    ax.set_ylabel("Energy (J)")
    ax.set_title("Energy breakdown: baseline vs best")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_pareto(points: list[SweepPoint], front: list[SweepPoint], path: str) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    xs = [p.latency.normalized if p.latency.normalized is not None else p.latency.t_mem
          for p in points]
    ys = [p.normalized_energy for p in points]
    ax.scatter(xs, ys, s=24, color="0.6", label="all points")
    fx = [p.latency.normalized if p.latency.normalized is not None else p.latency.t_mem
          for p in front]
    fy = [p.normalized_energy for p in front]
    order = np.argsort(fx)
    ax.plot([fx[i] for i in order], [fy[i] for i in order],
            marker="o", color="tab:red", label="Pareto front")
    for p in front:
        x = p.latency.normalized if p.latency.normalized is not None else p.latency.t_mem
        ax.annotate(f"{_cap_label(p.l1)},{_cap_label(p.llc)}",
                    (x, p.normalized_energy), fontsize=7,
                    textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("Normalized memory-side latency")
    ax.set_ylabel("Normalized total energy")
    ax.set_title("Energy vs latency")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
