"""Sweep report emission: CSV files, regime text, figures, summary table.

All delimited output uses fixed shortest-stable float formatting so two
runs with the same seed produce byte-identical files.
"""

from __future__ import annotations

import os

from .residency import trace_csv
from .sweep import (
    Regime,
    RegimeEvidence,
    SweepGrid,
    SweepPoint,
    SweepResult,
    baseline_and_best,
    classify_regime,
    pareto_front,
    regime_per_l1,
)


def _f(v: float) -> str:
    return f"{v:.12g}"


def _cap(n_bytes: int) -> str:
    if n_bytes % (1024 * 1024) == 0:
        return f"{n_bytes // (1024 * 1024)}MB"
    return f"{n_bytes // 1024}KB"


def heatmap_csv(points: list[SweepPoint], emit_roofline: bool = False) -> str:
    header = "l1,llc,total_energy,normalized_energy,t_mem,normalized_latency"
    if emit_roofline:
        header += ",roofline_total"
    lines = [header]
    for p in points:
        row = (f"{p.l1},{p.llc},{_f(p.energy.total)},{_f(p.normalized_energy)},"
               f"{_f(p.latency.t_mem)},{_f(p.latency.normalized or 1.0)}")
        if emit_roofline:
            row += f",{_f(max(p.t_compute, p.latency.t_mem))}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def breakdown_csv(points: list[SweepPoint]) -> str:
    lines = ["l1,llc,e_l1,e_llc,e_dram,e_core,e_leakage"]
    for p in points:
        e = p.energy
        lines.append(f"{p.l1},{p.llc},{_f(e.e_l1)},{_f(e.e_llc)},{_f(e.e_dram)},"
                     f"{_f(e.e_core)},{_f(e.e_leakage)}")
    return "\n".join(lines) + "\n"


def pareto_csv(front: list[SweepPoint]) -> str:
    lines = ["l1,llc,total_energy,t_mem,normalized_energy,normalized_latency"]
    for p in front:
        lines.append(f"{p.l1},{p.llc},{_f(p.energy.total)},{_f(p.latency.t_mem)},"
                     f"{_f(p.normalized_energy)},{_f(p.latency.normalized or 1.0)}")
    return "\n".join(lines) + "\n"


def _evidence_line(ev: RegimeEvidence, grid: SweepGrid) -> str:
    step = f"{_cap(grid.llc_points[ev.max_drop_step])}->" \
           f"{_cap(grid.llc_points[min(ev.max_drop_step + 1, len(grid.llc_points) - 1)])}"
    return (f"drop={ev.max_adjacent_drop:.4f} @{step} "
            f"sat_idx={ev.saturation_index} ({_cap(grid.llc_points[ev.saturation_index])}) "
            f"dram_frac={ev.dram_fraction_at_max:.4f}")


def regime_txt(regime: Regime, per_l1: list[tuple[int, RegimeEvidence]],
               grid: SweepGrid) -> str:
    ev = regime.evidence
    lines = [
        f"regime: {regime.label.value}",
        f"dram_fraction_at_max: {ev.dram_fraction_at_max:.6f}",
        f"max_adjacent_drop: {ev.max_adjacent_drop:.6f}",
        f"max_drop_step: {_cap(grid.llc_points[ev.max_drop_step])}->"
        f"{_cap(grid.llc_points[min(ev.max_drop_step + 1, len(grid.llc_points) - 1)])}",
        f"saturation_index: {ev.saturation_index} "
        f"({_cap(grid.llc_points[ev.saturation_index])})",
        "",
        "per-L1 evidence along the LLC axis:",
    ]
    for l1, row_ev in per_l1:
        lines.append(f"l1={_cap(l1)}: {_evidence_line(row_ev, grid)}")
    return "\n".join(lines) + "\n"


def summary_text(name: str, grid: SweepGrid, base: SweepPoint, best: SweepPoint,
                 regime: Regime) -> str:
    rel = best.energy.total / base.energy.total if base.energy.total else 1.0
    lines = [
        f"workload: {name}",
        f"grid: {len(grid.l1_points)}x{len(grid.llc_points)} ({grid.cells} points)",
        f"baseline ({_cap(base.l1)}, {_cap(base.llc)}): "
        f"total={_f(base.energy.total)} J  t_mem={_f(base.latency.t_mem)} s",
        f"best     ({_cap(best.l1)}, {_cap(best.llc)}): "
        f"total={_f(best.energy.total)} J  t_mem={_f(best.latency.t_mem)} s  "
        f"({100 * rel:.1f}% of baseline)",
        f"regime: {regime.label.value} "
        f"(drop={regime.evidence.max_adjacent_drop:.2f}, "
        f"dram_frac={regime.evidence.dram_fraction_at_max:.2f}, "
        f"sat_idx={regime.evidence.saturation_index})",
    ]
    return "\n".join(lines)


def write_report(name: str, result: SweepResult, grid: SweepGrid, out_dir: str,
                 *, emit_roofline: bool = False, emit_trace: bool = False,
                 figures: bool = True) -> tuple[str, list[str]]:
    """Write every report artifact; returns (summary text, written paths)."""
    os.makedirs(out_dir, exist_ok=True)
    points = list(result.points)
    front = pareto_front(points)
    regime = classify_regime(points, grid)
    per_l1 = regime_per_l1(points, grid)
    base, best = baseline_and_best(points, grid)

    written: list[str] = []

    def emit(fname: str, text: str) -> None:
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        written.append(path)

    emit("heatmap.csv", heatmap_csv(points, emit_roofline))
    emit("breakdown.csv", breakdown_csv(points))
    emit("pareto.csv", pareto_csv(front))
    emit("regime.txt", regime_txt(regime, per_l1, grid))

    if emit_trace:
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
        for (l1, llc), trace in sorted(result.traces.items()):
            path = os.path.join(trace_dir, f"trace_l1_{_cap(l1)}_llc_{_cap(llc)}.csv")
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(trace_csv(trace))
            written.append(path)

    if figures:
        from . import plots

        heat = os.path.join(out_dir, "heatmap.png")
        plots.render_heatmap(points, grid, heat)
        written.append(heat)
        bars = os.path.join(out_dir, "breakdown.png")
        plots.render_breakdown(base, best, bars)
        written.append(bars)
        scatter = os.path.join(out_dir, "pareto.png")
        plots.render_pareto(points, front, scatter)
        written.append(scatter)

    return summary_text(name, grid, base, best, regime), written
