"""Linearized traffic, energy, and latency accounting.

Memory energy is transferred bytes times per-level read/write
coefficients; compute energy is per-class operation counts times
normalized per-op costs; leakage is charged per byte of on-chip capacity
over the memory service time. Latency is a roofline-style proxy: the
maximum over hierarchy levels of boundary bytes divided by the level's
service bandwidth, deliberately memory-side only (compute service time
is reported separately).

Workload-level LLC traffic composes the two boundaries: every L1 refill
is sourced from the LLC and every L1 writeback lands in it, every DRAM
fill is written into the LLC and every DRAM writeback is read out of it.
The shipped technology parameters are representative, user-replaceable
values in the ranges reported by public SRAM/DRAM PPA sources.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigError
from .graph import OpClass, OperatorNode, WorkloadGraph
from .mapper import (
    ConvTiling,
    GemmTiling,
    MappingDecision,
    conv_l1_bytes,
    gemm_l1_bytes,
)
from .residency import ResidencyTrace

PICO = 1e-12


@dataclass(frozen=True)
class LevelParams:
    read_pj_per_byte: float
    write_pj_per_byte: float
    bandwidth_bytes_per_s: float
    leakage_pw_per_byte_capacity: float

    def __post_init__(self) -> None:
        if min(self.read_pj_per_byte, self.write_pj_per_byte,
               self.leakage_pw_per_byte_capacity) < 0:
            raise ConfigError("energy coefficients must be >= 0")
        if self.bandwidth_bytes_per_s <= 0:
            raise ConfigError("bandwidths must be > 0")


@dataclass(frozen=True)
class TechParams:
    l1: LevelParams
    llc: LevelParams
    dram: LevelParams
    pj_per_op: dict[OpClass, float]
    lanes: int = 16
    clock_hz: float = 1.0e9
    flops_per_lane_per_cycle: float = 2.0
    dram_capacity_bytes: int = 8 * 2**30

    def __post_init__(self) -> None:
        if self.lanes < 1 or self.clock_hz <= 0 or self.flops_per_lane_per_cycle <= 0:
            raise ConfigError("compute template parameters must be positive")
        if self.dram_capacity_bytes <= 0:
            raise ConfigError("dram_capacity_bytes must be positive")
        missing = [c.value for c in OpClass if c not in self.pj_per_op]
        if missing:
            raise ConfigError(f"pj_per_op missing operator classes: {missing}")
        if any(v < 0 for v in self.pj_per_op.values()):
            raise ConfigError("pj_per_op values must be >= 0")


@dataclass(frozen=True)
class TrafficBreakdown:
    """Boundary traffic in bytes; DRAM fields mirror the residency trace."""

    l1_read: int
    l1_write: int
    llc_read: int
    llc_write: int
    dram_read: int
    dram_write: int

    def scaled(self, k: float) -> "TrafficBreakdown":
        return TrafficBreakdown(*(int(v * k) for v in (
            self.l1_read, self.l1_write, self.llc_read,
            self.llc_write, self.dram_read, self.dram_write)))


@dataclass(frozen=True)
class EnergyBreakdown:
    e_l1: float
    e_llc: float
    e_dram: float
    e_core: float
    e_leakage: float

    @property
    def total(self) -> float:
        return self.e_l1 + self.e_llc + self.e_dram + self.e_core + self.e_leakage


@dataclass(frozen=True)
class LatencyProxy:
    t_l1: float
    t_llc: float
    t_dram: float
    normalized: float | None = None

    @property
    def t_mem(self) -> float:
        return max(self.t_l1, self.t_llc, self.t_dram)


def layer_l1_traffic(node: OperatorNode, decision: MappingDecision,
                     g: WorkloadGraph) -> tuple[int, int]:
    """(refill, writeback) bytes at the L1 boundary for one node.

    Tiled Conv/GEMM nodes follow the stationary-dependent reuse contract;
    streamed operators read each distinct input once and write each
    output once.
    """
    if decision.tiling is not None:
        e = g.tensors[node.outputs[0]].element_bytes
        if isinstance(decision.tiling, ConvTiling):
            return conv_l1_bytes(node.attrs, decision.tiling, decision.stationary, e)
        assert isinstance(decision.tiling, GemmTiling)
        return gemm_l1_bytes(node.attrs, decision.tiling, decision.stationary, e)
    read = sum(g.tensors[t].footprint_bytes for t in dict.fromkeys(node.inputs))
    write = sum(g.tensors[t].footprint_bytes for t in dict.fromkeys(node.outputs))
    return read, write


def workload_l1_traffic(g: WorkloadGraph,
                        decisions: dict[str, MappingDecision]) -> tuple[int, int]:
    read = 0
    write = 0
    for node in g.nodes:
        r, w = layer_l1_traffic(node, decisions[node.id], g)
        read += r
        write += w
    return read, write


def assemble_traffic(l1_read: int, l1_write: int,
                     trace: ResidencyTrace) -> TrafficBreakdown:
    """Compose workload traffic from the L1 contract and the residency walk."""
    llc_read = l1_read + trace.dram_write_bytes
    llc_write = l1_write + trace.dram_read_bytes
    assert llc_read >= l1_read  # the LLC sources every L1 fill
    return TrafficBreakdown(
        l1_read=l1_read,
        l1_write=l1_write,
        llc_read=llc_read,
        llc_write=llc_write,
        dram_read=trace.dram_read_bytes,
        dram_write=trace.dram_write_bytes,
    )


def workload_flops_by_class(g: WorkloadGraph) -> dict[OpClass, int]:
    out: dict[OpClass, int] = {}
    for node in g.nodes:
        for cls, f in node.flops_by_class().items():
            out[cls] = out.get(cls, 0) + f
    return out


def latency_proxy(traffic: TrafficBreakdown, tech: TechParams) -> LatencyProxy:
    """Per-level service time; the memory-side bound is their maximum."""
    return LatencyProxy(
        t_l1=(traffic.l1_read + traffic.l1_write) / tech.l1.bandwidth_bytes_per_s,
        t_llc=(traffic.llc_read + traffic.llc_write) / tech.llc.bandwidth_bytes_per_s,
        t_dram=(traffic.dram_read + traffic.dram_write) / tech.dram.bandwidth_bytes_per_s,
    )


def compute_service_time(total_flops: int, tech: TechParams) -> float:
    """Arithmetic service time; reported alongside but excluded from t_mem."""
    return total_flops / (tech.lanes * tech.clock_hz * tech.flops_per_lane_per_cycle)


def energy(traffic: TrafficBreakdown, flops_by_class: dict[OpClass, int],
           tech: TechParams, t_mem: float, *,
           l1_capacity: int, llc_capacity: int) -> EnergyBreakdown:
    """Joules per component for one evaluated configuration."""
    e_l1 = (traffic.l1_read * tech.l1.read_pj_per_byte
            + traffic.l1_write * tech.l1.write_pj_per_byte) * PICO
    e_llc = (traffic.llc_read * tech.llc.read_pj_per_byte
             + traffic.llc_write * tech.llc.write_pj_per_byte) * PICO
    e_dram = (traffic.dram_read * tech.dram.read_pj_per_byte
              + traffic.dram_write * tech.dram.write_pj_per_byte) * PICO
    e_core = sum(f * tech.pj_per_op[cls] for cls, f in flops_by_class.items()) * PICO
    e_leakage = (
        tech.l1.leakage_pw_per_byte_capacity * l1_capacity
        + tech.llc.leakage_pw_per_byte_capacity * llc_capacity
        + tech.dram.leakage_pw_per_byte_capacity * tech.dram_capacity_bytes
    ) * t_mem * PICO
    return EnergyBreakdown(e_l1, e_llc, e_dram, e_core, e_leakage)


# ---------------------------------------------------------------------------
# Technology parameter files
# ---------------------------------------------------------------------------

_LEVEL_KEYS = {"read_pj_per_byte", "write_pj_per_byte",
               "bandwidth_bytes_per_s", "leakage_pw_per_byte_capacity"}
_COMPUTE_KEYS = {"pj_per_op", "lanes", "clock_hz", "flops_per_lane_per_cycle"}
_TOP_KEYS = {"version", "levels", "compute", "dram_capacity_bytes"}


def _strict_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = allowed - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def tech_params_from_dict(doc: dict) -> TechParams:
    """Strict parse: all fields mandatory, unknown keys rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("tech params document must be an object")
    _strict_keys(doc, _TOP_KEYS, "tech params")
    levels = doc["levels"]
    _strict_keys(levels, {"L1", "LLC", "DRAM"}, "tech params levels")
    parsed = {}
    for name in ("L1", "LLC", "DRAM"):
        section = levels[name]
        _strict_keys(section, _LEVEL_KEYS, f"tech params level {name}")
        parsed[name] = LevelParams(**section)
    compute = doc["compute"]
    _strict_keys(compute, _COMPUTE_KEYS, "tech params compute")
    raw_ops = compute["pj_per_op"]
    try:
        pj_per_op = {OpClass(k): float(v) for k, v in raw_ops.items()}
    except ValueError as e:
        raise ConfigError(f"pj_per_op: unknown operator class ({e})") from None
    return TechParams(
        l1=parsed["L1"],
        llc=parsed["LLC"],
        dram=parsed["DRAM"],
        pj_per_op=pj_per_op,
        lanes=compute["lanes"],
        clock_hz=compute["clock_hz"],
        flops_per_lane_per_cycle=compute["flops_per_lane_per_cycle"],
        dram_capacity_bytes=doc["dram_capacity_bytes"],
    )


def load_tech_params(path: str) -> TechParams:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read tech params '{path}': {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"tech params '{path}': invalid JSON at line {e.lineno}") from e
    return tech_params_from_dict(doc)


def default_tech_params() -> TechParams:
    """The versioned defaults shipped with the package."""
    text = resources.files("memdse").joinpath("data/tech_default.json").read_text()
    return tech_params_from_dict(json.loads(text))
