"""Synthetic workload generators.

Four structural families mirror common pipeline shapes: U-Net style
encoder/decoder CNNs, correlation/warping cost-volume pipelines,
token-based attention matchers, and ray-sample MLP stacks with repeated
small GEMM blocks. Generators are deterministic per seed; the seed only
steers minor structural choices so scale is controlled by the explicit
parameters.

Two extra builders create capacity-study fixtures: a reuse block whose
live set is hit repeatedly across rounds, and a streaming graph whose
tensors are produced long before their single consumption.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ConfigError
from .graph import (
    OpClass,
    OperatorNode,
    TensorKind,
    TensorSpec,
    WorkloadGraph,
    build_graph,
    conv_output_dims,
)


@dataclass(frozen=True)
class SyntheticFamilySpec:
    family: str
    seed: int = 0
    params: dict[str, int] = field(default_factory=dict)


class _Builder:
    """Accumulates tensors and auto-numbered nodes, then validates."""

    def __init__(self, name: str):
        self.name = name
        self.tensors: list[TensorSpec] = []
        self.nodes: list[OperatorNode] = []

    def tensor(self, tid: str, dims: tuple[int, ...],
               kind: TensorKind = TensorKind.ACTIVATION, e: int = 4) -> str:
        self.tensors.append(TensorSpec(tid, dims, e, kind))
        return tid

    def node(self, tag: str, op: OpClass, inputs: list[str], outputs: list[str],
             attrs: dict[str, int] | None = None) -> str:
        nid = f"n{len(self.nodes):04d}_{tag}"
        self.nodes.append(OperatorNode(nid, op, tuple(inputs), tuple(outputs),
                                       attrs or {}))
        return nid

    def conv(self, tag: str, src: str, c_in: int, c_out: int, h: int, w: int,
             k: int = 3, stride: int = 1, pad: int = 1) -> tuple[str, int, int]:
        """Conv plus its weight tensor; returns (output id, H_out, W_out)."""
        attrs = {"K_h": k, "K_w": k, "stride": stride, "pad": pad,
                 "C_in": c_in, "C_out": c_out, "H_in": h, "W_in": w}
        h_out, w_out = conv_output_dims(attrs)
        wid = self.tensor(f"w_{tag}", (c_out, c_in, k, k), TensorKind.WEIGHT)
        out = self.tensor(f"t_{tag}", (c_out, h_out, w_out))
        self.node(tag, OpClass.CONV, [src, wid], [out], attrs)
        return out, h_out, w_out

    def act(self, tag: str, src: str, dims: tuple[int, ...]) -> str:
        out = self.tensor(f"t_{tag}", dims)
        self.node(tag, OpClass.ACTIVATION, [src], [out])
        return out

    def gemm(self, tag: str, a: str, m: int, n: int, k: int,
             b: str | None = None) -> str:
        """GEMM; when ``b`` is None a (k, n) weight operand is created."""
        if b is None:
            b = self.tensor(f"w_{tag}", (k, n), TensorKind.WEIGHT)
        out = self.tensor(f"t_{tag}", (m, n))
        self.node(tag, OpClass.GEMM, [a, b], [out], {"M": m, "N": n, "K": k})
        return out

    def finish(self) -> WorkloadGraph:
        return build_graph(self.name, self.tensors, self.nodes)


def _require_params(spec: SyntheticFamilySpec, defaults: dict[str, int]) -> dict[str, int]:
    unknown = set(spec.params) - set(defaults)
    if unknown:
        raise ConfigError(
            f"family '{spec.family}': unknown parameters {sorted(unknown)} "
            f"(accepted: {sorted(defaults)})"
        )
    out = dict(defaults)
    out.update(spec.params)
    for key, val in out.items():
        if val < 1:
            raise ConfigError(f"family '{spec.family}': parameter '{key}' must be >= 1")
    return out


def _encoder_decoder_cnn(spec: SyntheticFamilySpec) -> WorkloadGraph:
    p = _require_params(spec, {"depth": 3, "width": 16, "res": 64, "blocks": 2})
    depth, width, res, blocks = p["depth"], p["width"], p["res"], p["blocks"]
    if res >> (depth - 1) < 4:
        raise ConfigError("resolution too small for the requested depth")
    rng = random.Random(spec.seed)
    b = _Builder(f"encoder_decoder_cnn_d{depth}w{width}r{res}b{blocks}s{spec.seed}")

    cur = b.tensor("input", (3, res, res), TensorKind.INPUT)
    h = w = res
    c_in = 3
    skips: list[tuple[str, int, int, int]] = []
    for level in range(depth):
        c_out = width << level
        for blk in range(blocks):
            tag = f"enc{level}_{blk}"
            conv_out, h, w = b.conv(f"{tag}_conv", cur, c_in, c_out, h, w)
            cur = b.act(f"{tag}_act", conv_out, (c_out, h, w))
            c_in = c_out
            if blk > 0 and rng.random() < 0.5:
                res_out = b.tensor(f"t_{tag}_res", (c_out, h, w))
                b.node(f"{tag}_add", OpClass.ELEMENTWISE, [cur, conv_out], [res_out])
                cur = b.act(f"{tag}_resact", res_out, (c_out, h, w))
        skips.append((cur, c_out, h, w))
        if level < depth - 1:
            conv_out, h, w = b.conv(f"down{level}", cur, c_out, c_out, h, w,
                                    k=3, stride=2, pad=1)
            cur = b.act(f"down{level}_act", conv_out, (c_out, h, w))
            c_in = c_out

    for level in range(depth - 2, -1, -1):
        skip, skip_c, skip_h, skip_w = skips[level]
        up = b.tensor(f"t_up{level}", (c_in, skip_h, skip_w))
        b.node(f"up{level}", OpClass.TRANSFORM, [cur], [up])
        cat = b.tensor(f"t_cat{level}", (c_in + skip_c, skip_h, skip_w))
        b.node(f"cat{level}", OpClass.CONCAT, [up, skip], [cat])
        cur, h, w = cat, skip_h, skip_w
        c_in = c_in + skip_c
        c_out = skip_c
        for blk in range(blocks):
            tag = f"dec{level}_{blk}"
            conv_out, h, w = b.conv(f"{tag}_conv", cur, c_in, c_out, h, w)
            cur = b.act(f"{tag}_act", conv_out, (c_out, h, w))
            c_in = c_out

    head = b.tensor("output", (1, h, w), TensorKind.OUTPUT)
    wid = b.tensor("w_head", (1, c_in, 3, 3), TensorKind.WEIGHT)
    b.node("head", OpClass.CONV, [cur, wid], [head],
           {"K_h": 3, "K_w": 3, "stride": 1, "pad": 1,
            "C_in": c_in, "C_out": 1, "H_in": h, "W_in": w})
    return b.finish()


def _cost_volume(spec: SyntheticFamilySpec) -> WorkloadGraph:
    p = _require_params(spec, {"width": 16, "res": 48, "window": 4})
    width, res, window = p["width"], p["res"], p["window"]
    rng = random.Random(spec.seed)
    b = _Builder(f"cost_volume_w{width}r{res}k{window}s{spec.seed}")

    feats = []
    for view in (1, 2):
        cur = b.tensor(f"img{view}", (3, res, res), TensorKind.INPUT)
        c_in, h, w = 3, res, res
        for blk in range(2):
            conv_out, h, w = b.conv(f"enc{view}_{blk}", cur, c_in, width, h, w,
                                    k=3, stride=2 if blk == 0 else 1, pad=1)
            cur = b.act(f"enc{view}_{blk}_act", conv_out, (width, h, w))
            c_in = width
        feats.append(cur)
    feat_dims = (width, h, w)

    warped = b.tensor("t_warp", feat_dims)
    b.node("warp", OpClass.TRANSFORM, [feats[1]], [warped])
    vol = b.tensor("t_costvol", (window * window, h, w))
    b.node("corr", OpClass.TRANSFORM, [feats[0], warped], [vol])

    cur, c_in = vol, window * window
    for blk in range(2 + rng.randrange(2)):
        conv_out, h, w = b.conv(f"agg{blk}", cur, c_in, width, h, w)
        cur = b.act(f"agg{blk}_act", conv_out, (width, h, w))
        c_in = width
    probs = b.tensor("t_probs", (width, h, w))
    b.node("norm", OpClass.SOFTMAX, [cur], [probs])
    flow = b.tensor("output", (2, h, w), TensorKind.OUTPUT)
    wid = b.tensor("w_flow", (2, width, 3, 3), TensorKind.WEIGHT)
    b.node("flow", OpClass.CONV, [probs, wid], [flow],
           {"K_h": 3, "K_w": 3, "stride": 1, "pad": 1,
            "C_in": width, "C_out": 2, "H_in": h, "W_in": w})
    return b.finish()


def _attention_matcher(spec: SyntheticFamilySpec) -> WorkloadGraph:
    p = _require_params(spec, {"tokens": 64, "dim": 64, "layers": 2})
    tokens, dim, layers = p["tokens"], p["dim"], p["layers"]
    rng = random.Random(spec.seed)
    b = _Builder(f"attention_matcher_t{tokens}d{dim}l{layers}s{spec.seed}")

    raw = b.tensor("tokens_in", (tokens, dim), TensorKind.INPUT)
    cur = b.tensor("t_patchify", (tokens, dim))
    b.node("patchify", OpClass.RESHAPE, [raw], [cur])
    for layer in range(layers):
        q = b.gemm(f"l{layer}_q", cur, tokens, dim, dim)
        k = b.gemm(f"l{layer}_k", cur, tokens, dim, dim)
        v = b.gemm(f"l{layer}_v", cur, tokens, dim, dim)
        scores = b.gemm(f"l{layer}_qk", q, tokens, tokens, dim, b=k)
        probs = b.tensor(f"t_l{layer}_probs", (tokens, tokens))
        b.node(f"l{layer}_softmax", OpClass.SOFTMAX, [scores], [probs])
        ctx = b.gemm(f"l{layer}_pv", probs, tokens, dim, tokens, b=v)
        proj = b.gemm(f"l{layer}_proj", ctx, tokens, dim, dim)
        res1 = b.tensor(f"t_l{layer}_res1", (tokens, dim))
        b.node(f"l{layer}_add1", OpClass.ELEMENTWISE, [cur, proj], [res1])
        cur = b.act(f"l{layer}_act1", res1, (tokens, dim))
        expand = rng.choice((2, 4))
        mlp1 = b.gemm(f"l{layer}_mlp1", cur, tokens, dim * expand, dim)
        mlp1a = b.act(f"l{layer}_mlp1_act", mlp1, (tokens, dim * expand))
        mlp2 = b.gemm(f"l{layer}_mlp2", mlp1a, tokens, dim, dim * expand)
        res2 = b.tensor(f"t_l{layer}_res2", (tokens, dim))
        b.node(f"l{layer}_add2", OpClass.ELEMENTWISE, [cur, mlp2], [res2])
        cur = b.act(f"l{layer}_act2", res2, (tokens, dim))

    matches = b.tensor("output", (tokens, tokens), TensorKind.OUTPUT)
    b.node("match", OpClass.GEMM, [cur, cur], [matches],
           {"M": tokens, "N": tokens, "K": dim})
    return b.finish()


def _mlp_ray(spec: SyntheticFamilySpec) -> WorkloadGraph:
    p = _require_params(spec, {"rays": 256, "samples": 32, "hidden": 64, "layers": 4})
    rays, samples, hidden, layers = p["rays"], p["samples"], p["hidden"], p["layers"]
    rng = random.Random(spec.seed)
    b = _Builder(f"mlp_ray_r{rays}s{samples}h{hidden}l{layers}x{spec.seed}")

    batch = rays * samples
    coords = b.tensor("ray_coords", (batch, 6), TensorKind.INPUT)
    enc = b.tensor("t_posenc", (batch, 36))
    b.node("posenc", OpClass.TRANSFORM, [coords], [enc])
    cur, c_in = enc, 36
    skip_at = 1 + rng.randrange(max(1, layers - 1))
    skip_src = None
    for layer in range(layers):
        g_out = b.gemm(f"mlp{layer}", cur, batch, hidden, c_in)
        cur = b.act(f"mlp{layer}_act", g_out, (batch, hidden))
        c_in = hidden
        if layer == 0:
            skip_src = cur
        elif layer == skip_at and skip_src is not None:
            res = b.tensor(f"t_skip{layer}", (batch, hidden))
            b.node(f"skip{layer}_add", OpClass.ELEMENTWISE, [cur, skip_src], [res])
            cur = b.act(f"skip{layer}_act", res, (batch, hidden))
    rgba = b.gemm("head", cur, batch, 4, hidden)
    pix = b.tensor("output", (rays, 4), TensorKind.OUTPUT)
    b.node("composite", OpClass.REDUCE, [rgba], [pix])
    return b.finish()


FAMILIES = {
    "encoder_decoder_cnn": _encoder_decoder_cnn,
    "cost_volume": _cost_volume,
    "attention_matcher": _attention_matcher,
    "mlp_ray": _mlp_ray,
}


def generate_workload(spec: SyntheticFamilySpec) -> WorkloadGraph:
    """Build one synthetic workload; every result passes full validation."""
    gen = FAMILIES.get(spec.family)
    if gen is None:
        raise ConfigError(
            f"unknown family '{spec.family}' (choose from {sorted(FAMILIES)})"
        )
    if spec.seed < 0:
        raise ConfigError("seed must be >= 0")
    return gen(spec)


# ---------------------------------------------------------------------------
# Capacity-study fixtures
# ---------------------------------------------------------------------------

def make_reuse_workload(name: str, buffers: int, buffer_elems: int,
                        rounds: int) -> WorkloadGraph:
    """A block of ``buffers`` tensors produced once and re-read every round.

    The live set is roughly buffers * buffer_elems * 4 bytes; capacities
    below it force spills, capacities above it serve every round on chip.
    """
    b = _Builder(name)
    seed_t = b.tensor("seed", (1, 128, 128), TensorKind.INPUT)
    bufs = []
    for i in range(buffers):
        buf = b.tensor(f"t_buf{i:02d}", (buffer_elems,))
        b.node(f"expand{i:02d}", OpClass.TRANSFORM, [seed_t], [buf])
        bufs.append(buf)
    token = None
    for r in range(rounds):
        out = b.tensor(f"t_round{r:02d}", (64,))
        inputs = list(bufs) + ([token] if token else [])
        b.node(f"round{r:02d}", OpClass.REDUCE, inputs, [out])
        token = out
    final = b.tensor("output", (64,), TensorKind.OUTPUT)
    b.node("final", OpClass.ELEMENTWISE, [token], [final])
    return b.finish()


def make_streaming_workload(name: str, stages: int,
                            stage_elems: int) -> WorkloadGraph:
    """Single-use tensors consumed in reverse production order.

    The concurrently live footprint is stages * stage_elems * 4 bytes, so
    with a total far above any buffer capacity the walk spills at every
    point of the sweep.
    """
    b = _Builder(name)
    seed_t = b.tensor("seed", (1, 128, 128), TensorKind.INPUT)
    stages_t = []
    for i in range(stages):
        t = b.tensor(f"t_stage{i:02d}", (stage_elems,))
        b.node(f"produce{i:02d}", OpClass.TRANSFORM, [seed_t], [t])
        stages_t.append(t)
    token = None
    for i, t in enumerate(reversed(stages_t)):
        out = b.tensor(f"t_consume{i:02d}", (64,))
        inputs = [t] + ([token] if token else [])
        b.node(f"consume{i:02d}", OpClass.REDUCE, inputs, [out])
        token = out
    final = b.tensor("output", (64,), TensorKind.OUTPUT)
    b.node("final", OpClass.ELEMENTWISE, [token], [final])
    return b.finish()
