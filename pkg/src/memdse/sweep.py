"""Capacity-grid sweeps, Pareto fronts, and capacity-response regimes.

Each (L1, LLC) cell is evaluated independently: fuse, schedule, choose
per-layer stationary and tiling at that L1, replay residency at that LLC,
then account traffic, energy, and the latency proxy. Mapping depends on
L1 only, so cells sharing an L1 reuse one mapping; with per-call derived
seeds the results are identical for any worker count or execution order.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

from .costmodel import (
    EnergyBreakdown,
    LatencyProxy,
    TechParams,
    TrafficBreakdown,
    assemble_traffic,
    compute_service_time,
    energy,
    latency_proxy,
    workload_flops_by_class,
    workload_l1_traffic,
)
from .errors import ConfigError, DramCapacityError
from .graph import WorkloadGraph, topological_order
from .mapper import (
    AnnealingParams,
    FusionRecord,
    MapperPolicy,
    MappingDecision,
    TileCostWeights,
    apply_fusion,
    plan_mapping,
)
from .residency import ResidencyTrace, live_intervals, simulate_residency

KB = 1024
MB = 1024 * 1024


@dataclass(frozen=True)
class SweepGrid:
    """Strictly increasing capacity axes plus the reference configuration."""

    l1_points: tuple[int, ...] = (16 * KB, 32 * KB, 64 * KB, 128 * KB, 256 * KB)
    llc_points: tuple[int, ...] = (16 * MB, 32 * MB, 64 * MB)
    baseline: tuple[int, int] = (32 * KB, 16 * MB)

    def __post_init__(self) -> None:
        for name, pts in (("l1_points", self.l1_points), ("llc_points", self.llc_points)):
            if not pts:
                raise ConfigError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(pts, pts[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if self.baseline[0] not in self.l1_points or self.baseline[1] not in self.llc_points:
            raise ConfigError(f"baseline {self.baseline} not on the grid")

    @property
    def cells(self) -> int:
        return len(self.l1_points) * len(self.llc_points)


@dataclass(frozen=True)
class SweepPoint:
    l1: int
    llc: int
    energy: EnergyBreakdown
    traffic: TrafficBreakdown
    latency: LatencyProxy
    mapping_digest: str
    t_compute: float
    normalized_energy: float = 1.0


class RegimeLabel(Enum):
    EARLY_SATURATING = "EarlySaturating"
    CAPACITY_GATED = "CapacityGated"
    PERSISTENT_DRAM = "PersistentDram"


@dataclass(frozen=True)
class RegimeThresholds:
    saturation_tol: float = 0.05
    gating_drop: float = 0.4
    dram_fraction: float = 0.5


@dataclass(frozen=True)
class RegimeEvidence:
    dram_fraction_at_max: float
    max_adjacent_drop: float
    saturation_index: int
    max_drop_step: int  # drop occurs between llc_points[i] and [i+1]


@dataclass(frozen=True)
class Regime:
    label: RegimeLabel
    evidence: RegimeEvidence


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    fusion_records: tuple[FusionRecord, ...]
    decisions_by_l1: dict[int, dict[str, MappingDecision]]
    traces: dict[tuple[int, int], ResidencyTrace]


def _mapping_digest(decisions: dict[str, MappingDecision], order: tuple[str, ...]) -> str:
    text = ";".join(
        f"{nid}:{decisions[nid].stationary.value}:{decisions[nid].tiling}"
        for nid in order
    )
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _eval_l1_group(args: tuple) -> tuple:
    (g, schedule, intervals, flops_by_class, llc_points, l1, policy, sa,
     weights, tech, global_seed, collect_traces) = args
    decisions = plan_mapping(g, schedule, l1, policy, sa, weights, global_seed)
    digest = _mapping_digest(decisions, schedule.order)
    l1_read, l1_write = workload_l1_traffic(g, decisions)
    cells = []
    for llc in llc_points:
        trace = simulate_residency(g, schedule, intervals, llc)
        traffic = assemble_traffic(l1_read, l1_write, trace)
        lat = latency_proxy(traffic, tech)
        en = energy(traffic, flops_by_class, tech, lat.t_mem,
                    l1_capacity=l1, llc_capacity=llc)
        cells.append((llc, traffic, en, lat, trace if collect_traces else None))
    return l1, decisions, digest, cells


def run_sweep(g: WorkloadGraph, grid: SweepGrid, policy: MapperPolicy,
              sa: AnnealingParams, weights: TileCostWeights, tech: TechParams,
              *, global_seed: int = 0, workers: int = 1,
              collect_traces: bool = False) -> SweepResult:
    """Evaluate every grid cell; deterministic for a fixed global seed."""
    footprint = g.total_footprint_bytes()
    if footprint > tech.dram_capacity_bytes:
        raise DramCapacityError(footprint, tech.dram_capacity_bytes)

    fused, records = apply_fusion(g) if policy.fusion_enabled else (g, [])
    schedule = topological_order(fused)
    intervals = live_intervals(fused, schedule)
    flops_by_class = workload_flops_by_class(fused)
    t_compute = compute_service_time(sum(flops_by_class.values()), tech)

    job_args = [
        (fused, schedule, intervals, flops_by_class, grid.llc_points, l1,
         policy, sa, weights, tech, global_seed, collect_traces)
        for l1 in grid.l1_points
    ]
    if workers > 1 and len(job_args) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(job_args))) as pool:
            groups = list(pool.map(_eval_l1_group, job_args))
    else:
        groups = [_eval_l1_group(a) for a in job_args]

    decisions_by_l1: dict[int, dict[str, MappingDecision]] = {}
    traces: dict[tuple[int, int], ResidencyTrace] = {}
    points: list[SweepPoint] = []
    for l1, decisions, digest, cells in groups:
        decisions_by_l1[l1] = decisions
        prev_dram = None
        for llc, traffic, en, lat, trace in cells:
            dram_total = traffic.dram_read + traffic.dram_write
            if prev_dram is not None:
                assert dram_total <= prev_dram, (
                    f"DRAM traffic increased along the LLC axis at l1={l1}, llc={llc}"
                )
            prev_dram = dram_total
            if trace is not None:
                traces[(l1, llc)] = trace
            points.append(SweepPoint(l1, llc, en, traffic, lat, digest, t_compute))

    base = next(p for p in points if (p.l1, p.llc) == grid.baseline)
    base_e = base.energy.total
    base_t = base.latency.t_mem
    normalized = [
        replace(
            p,
            normalized_energy=p.energy.total / base_e if base_e else 1.0,
            latency=replace(p.latency,
                            normalized=p.latency.t_mem / base_t if base_t else 1.0),
        )
        for p in points
    ]
    return SweepResult(tuple(normalized), tuple(records), decisions_by_l1, traces)


def pareto_indices(pairs: list[tuple[float, float]]) -> list[int]:
    """Indices of pairs not dominated under minimize-both semantics.

    (a, b) dominates (c, d) when a <= c and b <= d with at least one
    strict inequality.
    """
    keep: list[int] = []
    for i, (e_i, t_i) in enumerate(pairs):
        dominated = any(
            e_j <= e_i and t_j <= t_i and (e_j < e_i or t_j < t_i)
            for j, (e_j, t_j) in enumerate(pairs) if j != i
        )
        if not dominated:
            keep.append(i)
    return keep


def pareto_front(points: list[SweepPoint]) -> list[SweepPoint]:
    """Points not dominated in (total energy, t_mem), ascending energy."""
    if not points:
        raise ValueError("pareto_front requires a non-empty point set")
    pairs = [(p.energy.total, p.latency.t_mem) for p in points]
    front = [points[i] for i in pareto_indices(pairs)]
    front.sort(key=lambda p: (p.energy.total, p.latency.t_mem, p.l1, p.llc))
    return front


def baseline_and_best(points: list[SweepPoint],
                      grid: SweepGrid) -> tuple[SweepPoint, SweepPoint]:
    """The reference cell and the minimum-energy cell (ties toward smaller
    LLC, then smaller L1)."""
    base = next(p for p in points if (p.l1, p.llc) == grid.baseline)
    best = min(points, key=lambda p: (p.energy.total, p.llc, p.l1))
    return base, best


def _llc_row(points: list[SweepPoint], l1: int) -> list[SweepPoint]:
    row = [p for p in points if p.l1 == l1]
    row.sort(key=lambda p: p.llc)
    return row


def _row_evidence(row: list[SweepPoint], tol: float) -> RegimeEvidence:
    totals = [p.energy.total for p in row]
    drams = [p.energy.e_dram for p in row]
    floor = min(totals)
    saturation_index = next(
        i for i, t in enumerate(totals) if t <= (1.0 + tol) * floor
    )
    max_drop = 0.0
    max_step = 0
    for i in range(len(drams) - 1):
        drop = (drams[i] - drams[i + 1]) / drams[i] if drams[i] > 0 else 0.0
        if drop > max_drop:
            max_drop = drop
            max_step = i
    last = row[-1]
    frac = last.energy.e_dram / last.energy.total if last.energy.total else 0.0
    return RegimeEvidence(frac, max_drop, saturation_index, max_step)


def classify_regime(points: list[SweepPoint], grid: SweepGrid,
                    thresholds: RegimeThresholds = RegimeThresholds()) -> Regime:
    """Shape of the energy response along the LLC axis at the baseline L1.

    The DRAM fraction is measured at the maximum capacities. Persistent
    DRAM dominance takes precedence over a gating transition; anything
    else counts as early saturation.
    """
    row = _llc_row(points, grid.baseline[0])
    if len(row) != len(grid.llc_points):
        raise ConfigError("points do not cover the full grid")
    ev = _row_evidence(row, thresholds.saturation_tol)
    top_row = _llc_row(points, grid.l1_points[-1])
    top = top_row[-1]
    frac_at_max = top.energy.e_dram / top.energy.total if top.energy.total else 0.0
    ev = replace(ev, dram_fraction_at_max=frac_at_max)
    if ev.dram_fraction_at_max >= thresholds.dram_fraction:
        label = RegimeLabel.PERSISTENT_DRAM
    elif ev.max_adjacent_drop >= thresholds.gating_drop:
        label = RegimeLabel.CAPACITY_GATED
    else:
        label = RegimeLabel.EARLY_SATURATING
    return Regime(label, ev)


def regime_per_l1(points: list[SweepPoint], grid: SweepGrid,
                  thresholds: RegimeThresholds = RegimeThresholds()
                  ) -> list[tuple[int, RegimeEvidence]]:
    """The same evidence measured separately along every L1 row."""
    return [
        (l1, _row_evidence(_llc_row(points, l1), thresholds.saturation_tol))
        for l1 in grid.l1_points
    ]
