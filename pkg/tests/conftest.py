"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import random

import pytest

from memdse.graph import (
    OpClass,
    OperatorNode,
    TensorKind,
    TensorSpec,
    WorkloadGraph,
    build_graph,
)

WORKLOADS_DIR = "workloads"


def chain_graph() -> WorkloadGraph:
    """input -> A -> t_a -> B -> t_b -> C -> out, one weight on A."""
    tensors = [
        TensorSpec("input", (4, 16), 4, TensorKind.INPUT),
        TensorSpec("w_a", (4, 4), 4, TensorKind.WEIGHT),
        TensorSpec("t_a", (4, 16), 4, TensorKind.ACTIVATION),
        TensorSpec("t_b", (4, 16), 4, TensorKind.ACTIVATION),
        TensorSpec("out", (4, 16), 4, TensorKind.OUTPUT),
    ]
    nodes = [
        OperatorNode("a", OpClass.ELEMENTWISE, ("input", "w_a"), ("t_a",)),
        OperatorNode("b", OpClass.ACTIVATION, ("t_a",), ("t_b",)),
        OperatorNode("c", OpClass.ACTIVATION, ("t_b",), ("out",)),
    ]
    return build_graph("chain", tensors, nodes)


def random_stream_dag(rng: random.Random, max_nodes: int = 50,
                      max_elems: int = 1024) -> WorkloadGraph:
    """Random DAG of streamed operators with every input/weight consumed."""
    n_inputs = rng.randint(1, 3)
    n_weights = rng.randint(0, 3)
    tensors: list[list] = []
    available: list[str] = []

    def rdims() -> tuple[int, int]:
        return (rng.randint(1, 64), rng.randint(4, max_elems))

    for i in range(n_inputs):
        tid = f"in{i}"
        tensors.append([tid, rdims(), TensorKind.INPUT])
        available.append(tid)
    for i in range(n_weights):
        tid = f"w{i}"
        tensors.append([tid, rdims(), TensorKind.WEIGHT])
        available.append(tid)
    n_nodes = rng.randint(1, max_nodes)
    node_specs: list[list] = []
    consumed: set[str] = set()
    ops = [OpClass.ELEMENTWISE, OpClass.REDUCE, OpClass.TRANSFORM]
    for i in range(n_nodes):
        k = rng.randint(1, min(3, len(available)))
        ins = rng.sample(available, k)
        consumed.update(ins)
        out = f"t{i}"
        tensors.append([out, rdims(), TensorKind.ACTIVATION])
        node_specs.append([f"n{i:03d}", rng.choice(ops), ins, [out]])
        available.append(out)
    for t in tensors:
        if t[2] in (TensorKind.INPUT, TensorKind.WEIGHT) and t[0] not in consumed:
            node_specs[rng.randrange(len(node_specs))][2].append(t[0])
            consumed.add(t[0])
    produced_consumed = {tid for spec in node_specs for tid in spec[2]}
    for t in tensors:
        if t[2] is TensorKind.ACTIVATION and t[0] not in produced_consumed:
            t[2] = TensorKind.OUTPUT
    specs = [TensorSpec(tid, dims, 4, kind) for tid, dims, kind in tensors]
    nodes = [OperatorNode(nid, op, tuple(ins), tuple(outs))
             for nid, op, ins, outs in node_specs]
    return build_graph("random_dag", specs, nodes)


def increasing_capacities(g: WorkloadGraph, n: int = 6) -> list[int]:
    """Strictly increasing capacities from a fraction of the footprint up
    to above it; the smallest stays above the largest single tensor so no
    point straddles the streamed threshold."""
    total = g.total_footprint_bytes()
    max_fp = max(t.footprint_bytes for t in g.tensors.values())
    raw = [max(total // 10, max_fp + 1), total // 5, total // 3,
           total // 2, (3 * total) // 4, total + 4096]
    caps: list[int] = []
    prev = 0
    for c in raw[:n]:
        c = max(c, prev + 1)
        caps.append(c)
        prev = c
    return caps


# ---------------------------------------------------------------------------
# Independent geometry oracles (enumeration, no shared arithmetic)
# ---------------------------------------------------------------------------

def sliding_window_count(extent_in: int, k: int, stride: int, pad: int) -> int:
    """Number of valid window start positions over the padded input."""
    padded = extent_in + 2 * pad
    count = 0
    pos = 0
    while pos + k <= padded:
        count += 1
        pos += stride
    return count


def input_tile_extent_oracle(tile_out: int, k: int, stride: int, pad: int,
                             extent_in: int) -> int:
    """Distinct padded input indices touched by a tile of outputs, plus the
    allocated padding border, clamped to the real extent."""
    touched = {o * stride + kk for o in range(tile_out) for kk in range(k)}
    span = max(touched) - min(touched) + 1
    assert span == len(range(min(touched), max(touched) + 1))
    return min(extent_in, span + 2 * pad)


def random_conv_attrs(rng: random.Random, max_hw: int = 64, max_k: int = 7,
                      max_stride: int = 4, max_pad: int = 3) -> dict[str, int]:
    """A random valid Conv attribute set."""
    from memdse.errors import GeometryError
    from memdse.graph import conv_output_dims

    while True:
        attrs = {
            "K_h": rng.randint(1, max_k), "K_w": rng.randint(1, max_k),
            "stride": rng.randint(1, max_stride), "pad": rng.randint(0, max_pad),
            "C_in": rng.randint(1, 64), "C_out": rng.randint(1, 64),
            "H_in": rng.randint(1, max_hw), "W_in": rng.randint(1, max_hw),
        }
        try:
            conv_output_dims(attrs)
            return attrs
        except GeometryError:
            continue


@pytest.fixture
def tiny_cnn_path() -> str:
    return f"{WORKLOADS_DIR}/tiny_cnn.json"
