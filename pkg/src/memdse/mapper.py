"""Per-layer mapping: stationary dataflow, tile-local fusion, L1 tiling search.

Tiling legality for a Conv layer follows the scratchpad budget rule: the
input tile (halo included), the weight tile, and the output/PSUM tile must
fit the effective L1 capacity simultaneously. Among legal tilings the
search minimizes a weighted sum of arithmetic work, L1-boundary traffic,
and tile count, explored with simulated annealing over a geometric
candidate ladder per blocking dimension. GEMM layers use the analogous
(m, n, k) blocking with the same feasibility test and the same search.

The stationary-dependent L1 traffic formulas defined here are the
reference accounting contract consumed by the cost model:

* input bytes are re-fetched once per output-channel block, halo included;
* WS keeps the full weight set resident (loaded once), OS reloads the
  weight tile for every (c_in, c_out, spatial) tile;
* OS accumulates PSUMs in place (output written once), WS writes the
  output per input-channel block and re-reads it for every block after
  the first.

GEMM maps m to the spatial role, n to output channels, and k to input
channels.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ConfigError, NoFeasibleTilingError
from .graph import (
    AbsorbedOp,
    OpClass,
    OperatorNode,
    Schedule,
    TensorKind,
    WorkloadGraph,
    build_graph,
    conv_output_dims,
    topological_order,
)


class Stationary(Enum):
    WS = "WS"
    OS = "OS"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class MapperPolicy:
    """Knobs for the uniform mapping rule set."""

    rho: float = 0.5
    l1_bookkeeping_bytes: int = 1024
    fusion_enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"rho must be in (0, 1), got {self.rho}")
        if self.l1_bookkeeping_bytes < 0:
            raise ConfigError("l1_bookkeeping_bytes must be >= 0")


@dataclass(frozen=True, slots=True)
class ConvTiling:
    c_in_t: int
    c_out_t: int
    h_out_t: int
    w_out_t: int


@dataclass(frozen=True, slots=True)
class GemmTiling:
    m_t: int
    n_t: int
    k_t: int


TilingConfig = ConvTiling | GemmTiling


@dataclass(frozen=True)
class FeasibilityReport:
    """Element counts of the three tile operands and the budget verdict."""

    s_in: int
    s_ker: int
    s_out: int
    bytes_total: int
    feasible: bool
    h_in_tile: int | None = None
    w_in_tile: int | None = None


@dataclass(frozen=True)
class TileCostWeights:
    """Global objective weights; never re-tuned per workload."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.1

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ConfigError("tile cost weights must be non-negative")


@dataclass(frozen=True)
class AnnealingParams:
    """Cooling schedule for the tiling search.

    ``t0`` and ``t_min`` default to a scale-free schedule: t0 is 1e3 times
    the cost of the initial feasible state and t_min is 1e-3 * t0, so no
    per-workload temperature tuning is ever needed.
    """

    t0: float | None = None
    t_min: float | None = None
    alpha_t: float = 0.9
    l_iters: int = 50
    delta: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha_t < 1.0:
            raise ConfigError("alpha_t must be in (0, 1)")
        if self.l_iters < 1:
            raise ConfigError("l_iters must be >= 1")
        if self.delta < 1:
            raise ConfigError("delta must be >= 1")
        if self.t0 is not None and self.t_min is not None:
            if not self.t0 > self.t_min > 0:
                raise ConfigError("need t0 > t_min > 0")


@dataclass(frozen=True)
class MappingDecision:
    node_id: str
    stationary: Stationary
    tiling: TilingConfig | None
    fused_into: str | None = None


@dataclass(frozen=True)
class FusionRecord:
    kept_node: str
    absorbed_node: str
    tile_local_tensor: str
    pattern: str


@dataclass(frozen=True)
class LayerTask:
    """A tiled operator prepared for the search: extents plus constants.

    ``extents`` is (C_in, C_out, H_out, W_out) for conv and (M, N, K) for
    GEMM. ``attrs`` carries the conv geometry (empty for GEMM).
    """

    node_id: str
    kind: str                      # "conv" | "gemm"
    extents: tuple[int, ...]
    attrs: dict[str, int]
    element_bytes: int
    stationary: Stationary
    flops: int


def l1_effective(l1_capacity: int, policy: MapperPolicy) -> int:
    """Capacity available for tiles after the bookkeeping reserve."""
    eff = l1_capacity - policy.l1_bookkeeping_bytes
    if eff <= 0:
        raise ConfigError(
            f"L1 capacity {l1_capacity} B does not exceed the bookkeeping "
            f"reserve {policy.l1_bookkeeping_bytes} B"
        )
    return eff


def select_stationary(weight_bytes: int, l1_eff: int, policy: MapperPolicy) -> Stationary:
    """WS when the weight footprint is strictly below rho * L1_eff, else OS."""
    return Stationary.WS if weight_bytes < policy.rho * l1_eff else Stationary.OS


def derive_seed(global_seed: int, node_id: str, l1_capacity: int) -> int:
    """Portable per-call seed; sweep parallelism cannot change results."""
    digest = hashlib.sha256(f"{global_seed}|{node_id}|{l1_capacity}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# Tile geometry and footprints
# ---------------------------------------------------------------------------

def induced_input_tile(tile: ConvTiling, attrs: dict[str, int]) -> tuple[int, int]:
    """Input tile extents induced by the output tile through the receptive
    field, padding border included, clamped to the real input extents."""
    h = min(attrs["H_in"], attrs["stride"] * (tile.h_out_t - 1) + attrs["K_h"] + 2 * attrs["pad"])
    w = min(attrs["W_in"], attrs["stride"] * (tile.w_out_t - 1) + attrs["K_w"] + 2 * attrs["pad"])
    return h, w


def tile_footprint(tile: TilingConfig, attrs: dict[str, int] | None,
                   e: int, l1_eff: int) -> FeasibilityReport:
    """Combined input/weight/output footprint of one tile versus the budget."""
    if isinstance(tile, ConvTiling):
        assert attrs is not None
        h_in, w_in = induced_input_tile(tile, attrs)
        s_in = tile.c_in_t * h_in * w_in
        s_ker = tile.c_in_t * tile.c_out_t * attrs["K_h"] * attrs["K_w"]
        s_out = tile.c_out_t * tile.h_out_t * tile.w_out_t
        total = (s_in + s_ker + s_out) * e
        return FeasibilityReport(s_in, s_ker, s_out, total, total <= l1_eff, h_in, w_in)
    s_in = tile.m_t * tile.k_t
    s_ker = tile.k_t * tile.n_t
    s_out = tile.m_t * tile.n_t
    total = (s_in + s_ker + s_out) * e
    return FeasibilityReport(s_in, s_ker, s_out, total, total <= l1_eff)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _halo_sum(extent_out: int, tile_out: int, real_in: int,
              stride: int, k_plus_pad: int) -> int:
    """Sum of induced input extents over the 1D tile grid (edge tile exact)."""
    full, rem = divmod(extent_out, tile_out)
    total = full * min(real_in, stride * (tile_out - 1) + k_plus_pad)
    if rem:
        total += min(real_in, stride * (rem - 1) + k_plus_pad)
    return total


def conv_l1_bytes(attrs: dict[str, int], tile: ConvTiling,
                  stationary: Stationary, e: int) -> tuple[int, int]:
    """(refill bytes, writeback bytes) at the L1 boundary for one conv layer."""
    c_in, c_out = attrs["C_in"], attrs["C_out"]
    k_h, k_w, stride, pad = attrs["K_h"], attrs["K_w"], attrs["stride"], attrs["pad"]
    h_out, w_out = conv_output_dims(attrs)
    n_ci = _ceil_div(c_in, tile.c_in_t)
    n_co = _ceil_div(c_out, tile.c_out_t)
    n_sp = _ceil_div(h_out, tile.h_out_t) * _ceil_div(w_out, tile.w_out_t)
    h_sum = _halo_sum(h_out, tile.h_out_t, attrs["H_in"], stride, k_h + 2 * pad)
    w_sum = _halo_sum(w_out, tile.w_out_t, attrs["W_in"], stride, k_w + 2 * pad)

    input_bytes = n_co * c_in * h_sum * w_sum * e
    weight_once = c_in * c_out * k_h * k_w * e
    out_footprint = c_out * h_out * w_out * e
    if stationary is Stationary.WS:
        weight_bytes = weight_once
        psum_reads = (n_ci - 1) * out_footprint
        out_writes = n_ci * out_footprint
    else:
        weight_bytes = weight_once * n_sp
        psum_reads = 0
        out_writes = out_footprint
    return input_bytes + weight_bytes + psum_reads, out_writes


def gemm_l1_bytes(attrs: dict[str, int], tile: GemmTiling,
                  stationary: Stationary, e: int) -> tuple[int, int]:
    """(refill bytes, writeback bytes) at the L1 boundary for one GEMM layer."""
    m, n, k = attrs["M"], attrs["N"], attrs["K"]
    n_m = _ceil_div(m, tile.m_t)
    n_n = _ceil_div(n, tile.n_t)
    n_k = _ceil_div(k, tile.k_t)
    a_bytes = m * k * n_n * e
    b_once = k * n * e
    out_footprint = m * n * e
    if stationary is Stationary.WS:
        b_bytes = b_once
        psum_reads = (n_k - 1) * out_footprint
        out_writes = n_k * out_footprint
    else:
        b_bytes = b_once * n_m
        psum_reads = 0
        out_writes = out_footprint
    return a_bytes + b_bytes + psum_reads, out_writes


def tile_count(tile: TilingConfig, extents: tuple[int, ...]) -> int:
    if isinstance(tile, ConvTiling):
        c_in, c_out, h_out, w_out = extents
        return (_ceil_div(c_in, tile.c_in_t) * _ceil_div(c_out, tile.c_out_t)
                * _ceil_div(h_out, tile.h_out_t) * _ceil_div(w_out, tile.w_out_t))
    m, n, k = extents
    return _ceil_div(m, tile.m_t) * _ceil_div(n, tile.n_t) * _ceil_div(k, tile.k_t)


def tile_cost(tile: TilingConfig, layer: LayerTask,
              weights: TileCostWeights, l1_eff: int) -> float:
    """Weighted objective alpha*Compute + beta*Bytes + gamma*N_tiles.

    Infeasible tiles cost +inf. Weights are applied raw; the annealer
    derives per-layer normalized weights before calling this.
    """
    report = tile_footprint(tile, layer.attrs, layer.element_bytes, l1_eff)
    if not report.feasible:
        return math.inf
    if layer.kind == "conv":
        rd, wr = conv_l1_bytes(layer.attrs, tile, layer.stationary, layer.element_bytes)
    else:
        rd, wr = gemm_l1_bytes(layer.attrs, tile, layer.stationary, layer.element_bytes)
    return (weights.alpha * layer.flops
            + weights.beta * (rd + wr)
            + weights.gamma * tile_count(tile, layer.extents))


def make_layer_task(node: OperatorNode, g: WorkloadGraph,
                    stationary: Stationary) -> LayerTask:
    """Prepare a Conv or GEMM node for the tiling search."""
    e = g.tensors[node.outputs[0]].element_bytes
    if node.op_class is OpClass.CONV:
        h_out, w_out = conv_output_dims(node.attrs)
        extents = (node.attrs["C_in"], node.attrs["C_out"], h_out, w_out)
        return LayerTask(node.id, "conv", extents, dict(node.attrs), e, stationary, node.flops)
    extents = (node.attrs["M"], node.attrs["N"], node.attrs["K"])
    return LayerTask(node.id, "gemm", extents, dict(node.attrs), e, stationary, node.flops)


def stationary_weight_bytes(node: OperatorNode, g: WorkloadGraph) -> int:
    """Footprint of the stationary-candidate operand, from the attributes."""
    e = g.tensors[node.outputs[0]].element_bytes
    if node.op_class is OpClass.CONV:
        a = node.attrs
        return a["C_in"] * a["C_out"] * a["K_h"] * a["K_w"] * e
    a = node.attrs
    return a["K"] * a["N"] * e


# ---------------------------------------------------------------------------
# Simulated annealing over the tiling ladder
# ---------------------------------------------------------------------------

def _ladder(extent: int) -> tuple[int, ...]:
    """Geometric candidate values for one blocking dimension.

    Powers of two from 1 merged with the halving chain from the extent
    (extent, ceil(extent/2), ...), so the ladder is geometric with ratio
    two while its upper values divide the extent into whole tile counts.
    """
    vals = set()
    v = 1
    while v < extent:
        vals.add(v)
        v *= 2
    v = extent
    while v > 1:
        vals.add(v)
        v = -(-v // 2)
    vals.add(1)
    return tuple(sorted(vals))


def _make_tiling(kind: str, values: tuple[int, ...]) -> TilingConfig:
    if kind == "conv":
        return ConvTiling(*values)
    return GemmTiling(*values)


def normalized_weights(layer: LayerTask, l1_eff: int,
                       weights: TileCostWeights) -> tuple[TileCostWeights, TilingConfig]:
    """Scale the objective so each term is 1.0 at the initial feasible state.

    Returns the effective weights and the initial state the annealer starts
    from. Raises NoFeasibleTilingError when even the minimal tile is over
    budget.
    """
    ladders = [_ladder(x) for x in layer.extents]
    idx = _initial_state(layer, l1_eff, ladders)
    tile0 = _make_tiling(layer.kind, tuple(lad[i] for lad, i in zip(ladders, idx)))
    if layer.kind == "conv":
        rd, wr = conv_l1_bytes(layer.attrs, tile0, layer.stationary, layer.element_bytes)
    else:
        rd, wr = gemm_l1_bytes(layer.attrs, tile0, layer.stationary, layer.element_bytes)
    bytes0 = rd + wr
    n0 = tile_count(tile0, layer.extents)
    eff = TileCostWeights(
        alpha=weights.alpha / layer.flops if layer.flops else 0.0,
        beta=weights.beta / bytes0 if bytes0 else 0.0,
        gamma=weights.gamma / n0,
    )
    return eff, tile0


def _initial_state(layer: LayerTask, l1_eff: int,
                   ladders: list[tuple[int, ...]]) -> list[int]:
    """Shrink blocking factors from the full extents until the tile fits."""
    idx = [len(lad) - 1 for lad in ladders]

    def feasible() -> bool:
        vals = tuple(lad[i] for lad, i in zip(ladders, idx))
        report = tile_footprint(_make_tiling(layer.kind, vals), layer.attrs,
                                layer.element_bytes, l1_eff)
        return report.feasible

    while not feasible():
        candidates = [d for d in range(len(idx)) if idx[d] > 0]
        if not candidates:
            min_tile = _make_tiling(layer.kind, tuple(lad[0] for lad in ladders))
            report = tile_footprint(min_tile, layer.attrs, layer.element_bytes, l1_eff)
            raise NoFeasibleTilingError(layer.node_id, l1_eff, report.bytes_total)
        # shrink the currently largest blocking factor first
        d = max(candidates, key=lambda d: (ladders[d][idx[d]], -d))
        idx[d] -= 1
    return idx


def anneal_tiling(layer: LayerTask, l1_eff: int, sa: AnnealingParams,
                  weights: TileCostWeights) -> TilingConfig:
    """Search for a low-cost legal tiling of one layer.

    Starts from a feasible state obtained by shrinking blocking factors,
    then perturbs one dimension per move by ``sa.delta`` steps along its
    candidate ladder, rejecting illegal states (infinite cost) and
    accepting uphill moves with the usual exp(-delta/T) rule under
    geometric cooling. Deterministic for a fixed seed. When the whole
    layer fits in L1 the full-layer tile is returned directly since every
    objective term is minimal there.
    """
    ladders = [_ladder(x) for x in layer.extents]
    full = tuple(lad[-1] for lad in ladders)
    full_tile = _make_tiling(layer.kind, full)
    if tile_footprint(full_tile, layer.attrs, layer.element_bytes, l1_eff).feasible:
        # the minimal tile must still fit for the contract's error case
        return full_tile

    idx = _initial_state(layer, l1_eff, ladders)
    ndim = len(ladders)
    e = layer.element_bytes
    kind = layer.kind

    # Per-dimension lookup tables so one cost evaluation is pure arithmetic.
    if kind == "conv":
        c_in, c_out, h_out, w_out = layer.extents
        a = layer.attrs
        kh2p = a["K_h"] + 2 * a["pad"]
        kw2p = a["K_w"] + 2 * a["pad"]
        stride, h_in_real, w_in_real = a["stride"], a["H_in"], a["W_in"]
        ci_vals, co_vals, h_vals, w_vals = ladders
        n_ci_t = tuple(_ceil_div(c_in, v) for v in ci_vals)
        n_co_t = tuple(_ceil_div(c_out, v) for v in co_vals)
        n_h_t = tuple(_ceil_div(h_out, v) for v in h_vals)
        n_w_t = tuple(_ceil_div(w_out, v) for v in w_vals)
        h_in_t = tuple(min(h_in_real, stride * (v - 1) + kh2p) for v in h_vals)
        w_in_t = tuple(min(w_in_real, stride * (v - 1) + kw2p) for v in w_vals)
        h_sum_t = tuple(_halo_sum(h_out, v, h_in_real, stride, kh2p) for v in h_vals)
        w_sum_t = tuple(_halo_sum(w_out, v, w_in_real, stride, kw2p) for v in w_vals)
        kk = a["K_h"] * a["K_w"]
        weight_once = c_in * c_out * kk * e
        out_fp = c_out * h_out * w_out * e
        in_scale = c_in * e
        ws = layer.stationary is Stationary.WS

        def raw_bytes_and_tiles(i0: int, i1: int, i2: int, i3: int) -> tuple[int, int, int]:
            ci, co = ci_vals[i0], co_vals[i1]
            ht, wt = h_vals[i2], w_vals[i3]
            s_in = ci * h_in_t[i2] * w_in_t[i3]
            s_ker = ci * co * kk
            s_out = co * ht * wt
            footprint = (s_in + s_ker + s_out) * e
            n_sp = n_h_t[i2] * n_w_t[i3]
            total = n_co_t[i1] * in_scale * h_sum_t[i2] * w_sum_t[i3]
            if ws:
                total += weight_once + (2 * n_ci_t[i0] - 1) * out_fp
            else:
                total += weight_once * n_sp + out_fp
            return footprint, total, n_ci_t[i0] * n_co_t[i1] * n_sp

    else:
        m, n, k = layer.extents
        m_vals, n_vals, k_vals = ladders
        n_m_t = tuple(_ceil_div(m, v) for v in m_vals)
        n_n_t = tuple(_ceil_div(n, v) for v in n_vals)
        n_k_t = tuple(_ceil_div(k, v) for v in k_vals)
        b_once = k * n * e
        a_full = m * k * e
        out_fp = m * n * e
        ws = layer.stationary is Stationary.WS

        def raw_bytes_and_tiles(i0: int, i1: int, i2: int) -> tuple[int, int, int]:
            mt, nt, kt = m_vals[i0], n_vals[i1], k_vals[i2]
            footprint = (mt * kt + kt * nt + mt * nt) * e
            total = a_full * n_n_t[i1]
            if ws:
                total += b_once + (2 * n_k_t[i2] - 1) * out_fp
            else:
                total += b_once * n_m_t[i0] + out_fp
            return footprint, total, n_m_t[i0] * n_n_t[i1] * n_k_t[i2]

    # Normalize the objective at the initial state.
    _, bytes0, n0 = raw_bytes_and_tiles(*idx)
    alpha_term = weights.alpha  # compute term is constant across tilings
    beta_eff = weights.beta / bytes0 if bytes0 else 0.0
    gamma_eff = weights.gamma / n0

    sizes = [len(lad) for lad in ladders]
    memo: dict[tuple[int, ...], float] = {}

    def cost_of(s: tuple[int, ...]) -> float:
        c = memo.get(s)
        if c is None:
            fp, total, ntiles = raw_bytes_and_tiles(*s)
            c = math.inf if fp > l1_eff else alpha_term + beta_eff * total + gamma_eff * ntiles
            memo[s] = c
        return c

    cur = tuple(idx)
    f = cost_of(cur)
    best, best_f = cur, f

    t0 = sa.t0 if sa.t0 is not None else 1e3 * f
    t_min = sa.t_min if sa.t_min is not None else 1e-3 * t0
    if not t0 > t_min > 0:
        raise ConfigError(f"resolved temperatures invalid: t0={t0}, t_min={t_min}")

    rng = random.Random(sa.seed)
    delta = sa.delta
    l_iters = sa.l_iters
    t = t0
    exp = math.exp
    while t > t_min:
        for _ in range(l_iters):
            d = rng.randrange(ndim)
            step = delta if rng.random() < 0.5 else -delta
            nd = cur[d] + step
            if nd < 0:
                nd = 0
            elif nd >= sizes[d]:
                nd = sizes[d] - 1
            cand = cur[:d] + (nd,) + cur[d + 1:]
            g = cost_of(cand)
            dlt = g - f
            if dlt <= 0 or rng.random() < exp(-dlt / t):
                cur, f = cand, g
                if f < best_f:
                    best, best_f = cur, f
        t *= sa.alpha_t

    values = tuple(lad[i] for lad, i in zip(ladders, best))
    return _make_tiling(kind, values)


# ---------------------------------------------------------------------------
# Fusion
# ---------------------------------------------------------------------------

_FUSABLE_PRODUCERS = frozenset({OpClass.CONV, OpClass.GEMM, OpClass.ELEMENTWISE})


def apply_fusion(g: WorkloadGraph) -> tuple[WorkloadGraph, list[FusionRecord]]:
    """Fold unary activations into their producers where legal.

    Two patterns only: Conv/GEMM followed by a unary activation, and a
    two-input elementwise add followed by an activation. The intermediate
    must be a single-consumer activation tensor of unchanged shape, so the
    fused pair never crosses reshape/concat/materialization boundaries and
    never changes the graph-external inputs or outputs. The intermediate
    becomes tile-local: it is dropped from the fused graph and generates
    no LLC or DRAM traffic.
    """
    schedule = topological_order(g)
    by_id = {n.id: n for n in g.nodes}
    absorbed: dict[str, str] = {}    # absorbed activation id -> kept producer id
    records: list[FusionRecord] = []

    for nid in schedule.order:
        node = by_id[nid]
        if nid in absorbed or node.op_class not in _FUSABLE_PRODUCERS:
            continue
        if len(node.outputs) != 1:
            continue
        if node.op_class is OpClass.ELEMENTWISE and len(node.inputs) != 2:
            continue
        mid = node.outputs[0]
        spec = g.tensors[mid]
        if spec.kind is not TensorKind.ACTIVATION:
            continue
        users = g.consumers.get(mid, ())
        if len(users) != 1 or users[0] in absorbed:
            continue
        consumer = by_id[users[0]]
        if consumer.op_class is not OpClass.ACTIVATION:
            continue
        if len(consumer.inputs) != 1 or len(consumer.outputs) != 1:
            continue
        out_spec = g.tensors[consumer.outputs[0]]
        if out_spec.dims != spec.dims or out_spec.element_bytes != spec.element_bytes:
            continue
        absorbed[consumer.id] = nid
        pattern = ("conv_activation" if node.op_class in (OpClass.CONV, OpClass.GEMM)
                   else "add_activation")
        records.append(FusionRecord(nid, consumer.id, mid, pattern))

    if not records:
        return g, []

    kept_merge = {r.kept_node: r for r in records}
    dropped_tensors = {r.tile_local_tensor for r in records}
    new_nodes: list[OperatorNode] = []
    for node in g.nodes:
        if node.id in absorbed:
            continue
        rec = kept_merge.get(node.id)
        if rec is None:
            new_nodes.append(node)
            continue
        act = by_id[rec.absorbed_node]
        new_nodes.append(OperatorNode(
            id=node.id,
            op_class=node.op_class,
            inputs=node.inputs,
            outputs=act.outputs,
            attrs=dict(node.attrs),
            flops=node.flops + act.flops,
            absorbed=node.absorbed + (AbsorbedOp(act.id, act.op_class, act.flops),),
        ))
    new_tensors = [t for t in g.tensors.values() if t.id not in dropped_tensors]
    fused = build_graph(g.name, new_tensors, new_nodes)
    return fused, records


# ---------------------------------------------------------------------------
# Per-graph mapping
# ---------------------------------------------------------------------------

def plan_mapping(g: WorkloadGraph, schedule: Schedule, l1_capacity: int,
                 policy: MapperPolicy, sa: AnnealingParams,
                 weights: TileCostWeights, global_seed: int) -> dict[str, MappingDecision]:
    """Stationary choice plus tiling for every node at one L1 capacity."""
    l1_eff = l1_effective(l1_capacity, policy)
    by_id = {n.id: n for n in g.nodes}
    decisions: dict[str, MappingDecision] = {}
    for nid in schedule.order:
        node = by_id[nid]
        fused_into = node.absorbed[0].id if node.absorbed else None
        if node.op_class not in (OpClass.CONV, OpClass.GEMM):
            decisions[nid] = MappingDecision(nid, Stationary.NOT_APPLICABLE, None, fused_into)
            continue
        b_w = stationary_weight_bytes(node, g)
        stat = select_stationary(b_w, l1_eff, policy)
        layer = make_layer_task(node, g, stat)
        call_sa = replace(sa, seed=derive_seed(global_seed, nid, l1_capacity))
        tiling = anneal_tiling(layer, l1_eff, call_sa, weights)
        decisions[nid] = MappingDecision(nid, stat, tiling, fused_into)
    return decisions
