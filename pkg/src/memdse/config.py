"""Engine configuration: one self-describing JSON file, CLI flags override.

Every knob has a default so the tool runs with no config at all; unknown
keys are rejected so archived configs stay bit-exact reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

from .costmodel import TechParams, default_tech_params, load_tech_params
from .errors import ConfigError
from .mapper import AnnealingParams, MapperPolicy, TileCostWeights
from .sweep import KB, MB, SweepGrid

_TOP_KEYS = {"tech_params", "grid", "mapper", "annealing", "tile_cost_weights",
             "seed", "output_dir", "flags"}
_GRID_KEYS = {"l1_kb", "llc_mb", "baseline_l1_kb", "baseline_llc_mb"}
_MAPPER_KEYS = {"rho", "l1_bookkeeping_bytes", "fusion_enabled"}
_ANNEAL_KEYS = {"t0", "t_min", "alpha_t", "l_iters", "delta"}
_WEIGHT_KEYS = {"alpha", "beta", "gamma"}
_FLAG_KEYS = {"emit_trace", "emit_roofline_total"}

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class EngineConfig:
    tech: TechParams
    grid: SweepGrid
    policy: MapperPolicy
    annealing: AnnealingParams
    weights: TileCostWeights
    seed: int = 0
    output_dir: str = "out"
    emit_trace: bool = False
    emit_roofline_total: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit value")


def default_engine_config() -> EngineConfig:
    return EngineConfig(
        tech=default_tech_params(),
        grid=SweepGrid(),
        policy=MapperPolicy(),
        annealing=AnnealingParams(),
        weights=TileCostWeights(),
    )


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def load_engine_config(path: str | None) -> EngineConfig:
    """Read a config file; missing sections fall back to defaults."""
    if path is None:
        return default_engine_config()
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config '{path}': invalid JSON at line {e.lineno}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config '{path}': top level must be an object")
    _reject_unknown(doc, _TOP_KEYS, f"config '{path}'")

    if "tech_params" in doc:
        tech_path = doc["tech_params"]
        if not os.path.isabs(tech_path):
            tech_path = os.path.join(os.path.dirname(os.path.abspath(path)), tech_path)
        tech = load_tech_params(tech_path)
    else:
        tech = default_tech_params()

    grid = SweepGrid()
    if "grid" in doc:
        section = doc["grid"]
        _reject_unknown(section, _GRID_KEYS, "config grid")
        defaults = SweepGrid()
        l1 = tuple(int(v) * KB for v in section.get("l1_kb", ())) or defaults.l1_points
        llc = tuple(int(v) * MB for v in section.get("llc_mb", ())) or defaults.llc_points
        base_l1 = int(section.get("baseline_l1_kb", 0)) * KB or (
            defaults.baseline[0] if defaults.baseline[0] in l1 else l1[0])
        base_llc = int(section.get("baseline_llc_mb", 0)) * MB or (
            defaults.baseline[1] if defaults.baseline[1] in llc else llc[0])
        grid = SweepGrid(l1, llc, (base_l1, base_llc))

    policy = MapperPolicy()
    if "mapper" in doc:
        section = doc["mapper"]
        _reject_unknown(section, _MAPPER_KEYS, "config mapper")
        policy = MapperPolicy(
            rho=section.get("rho", policy.rho),
            l1_bookkeeping_bytes=section.get("l1_bookkeeping_bytes",
                                             policy.l1_bookkeeping_bytes),
            fusion_enabled=section.get("fusion_enabled", policy.fusion_enabled),
        )

    annealing = AnnealingParams()
    if "annealing" in doc:
        section = doc["annealing"]
        _reject_unknown(section, _ANNEAL_KEYS, "config annealing")
        annealing = AnnealingParams(
            t0=section.get("t0"),
            t_min=section.get("t_min"),
            alpha_t=section.get("alpha_t", annealing.alpha_t),
            l_iters=section.get("l_iters", annealing.l_iters),
            delta=section.get("delta", annealing.delta),
        )

    weights = TileCostWeights()
    if "tile_cost_weights" in doc:
        section = doc["tile_cost_weights"]
        _reject_unknown(section, _WEIGHT_KEYS, "config tile_cost_weights")
        weights = TileCostWeights(
            alpha=section.get("alpha", weights.alpha),
            beta=section.get("beta", weights.beta),
            gamma=section.get("gamma", weights.gamma),
        )

    emit_trace = False
    emit_roofline = False
    if "flags" in doc:
        section = doc["flags"]
        _reject_unknown(section, _FLAG_KEYS, "config flags")
        emit_trace = bool(section.get("emit_trace", False))
        emit_roofline = bool(section.get("emit_roofline_total", False))

    return EngineConfig(
        tech=tech,
        grid=grid,
        policy=policy,
        annealing=annealing,
        weights=weights,
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "out")),
        emit_trace=emit_trace,
        emit_roofline_total=emit_roofline,
    )


def with_overrides(cfg: EngineConfig, *, seed: int | None = None,
                   output_dir: str | None = None) -> EngineConfig:
    out = cfg
    if seed is not None:
        out = replace(out, seed=seed)
    if output_dir is not None:
        out = replace(out, output_dir=output_dir)
    return out
