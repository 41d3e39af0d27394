"""Analytical design-space exploration for operator-graph workloads on a
SIMD + L1-scratchpad + software-managed-LLC + DRAM hierarchy."""

__version__ = "0.1.0"

from .costmodel import (
    EnergyBreakdown,
    LatencyProxy,
    TechParams,
    TrafficBreakdown,
    default_tech_params,
    energy,
    latency_proxy,
    layer_l1_traffic,
    load_tech_params,
)
from .errors import (
    ConfigError,
    DramCapacityError,
    GeometryError,
    GraphValidationError,
    InputError,
    IrSyntaxError,
    MemdseError,
    ModelError,
    NoFeasibleTilingError,
)
from .graph import (
    OpClass,
    OperatorNode,
    Schedule,
    StatsReport,
    TensorKind,
    TensorSpec,
    WorkloadGraph,
    build_graph,
    conv_output_dims,
    load_workload,
    parse_workload,
    serialize_workload,
    tensor_stats,
    topological_order,
)
from .mapper import (
    AnnealingParams,
    ConvTiling,
    FeasibilityReport,
    GemmTiling,
    MapperPolicy,
    MappingDecision,
    Stationary,
    TileCostWeights,
    TilingConfig,
    anneal_tiling,
    apply_fusion,
    induced_input_tile,
    plan_mapping,
    select_stationary,
    tile_cost,
    tile_footprint,
)
from .residency import (
    LiveInterval,
    ResidencyTrace,
    live_intervals,
    simulate_residency,
)
from .sweep import (
    Regime,
    RegimeLabel,
    RegimeThresholds,
    SweepGrid,
    SweepPoint,
    SweepResult,
    classify_regime,
    pareto_front,
    run_sweep,
)
from .synth import SyntheticFamilySpec, generate_workload
