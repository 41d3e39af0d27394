"""Operator-graph workload IR: parsing, validation, scheduling, scale stats.

A workload is a DAG of operator nodes over named tensors. The on-disk
format is a JSON document with top-level keys ``name``, ``tensors`` and
``nodes`` (see docs/ir_format.md). Everything here is immutable after
construction and safe to share across sweep workers.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import GeometryError, GraphValidationError, IrSyntaxError

VALID_ELEMENT_BYTES = (1, 2, 4)


class TensorKind(Enum):
    WEIGHT = "weight"
    ACTIVATION = "activation"
    INPUT = "input"
    OUTPUT = "output"


class OpClass(Enum):
    CONV = "Conv"
    GEMM = "GEMM"
    ELEMENTWISE = "Elementwise"
    ACTIVATION = "Activation"
    TRANSFORM = "Transform"
    REDUCE = "Reduce"
    SOFTMAX = "Softmax"
    CONCAT = "Concat"
    RESHAPE = "Reshape"
    DATA_MOVEMENT = "DataMovement"


#: Operator classes that receive a blocked L1 tiling; everything else streams.
TILED_OP_CLASSES = frozenset({OpClass.CONV, OpClass.GEMM})

#: Classes that move or repack data without arithmetic.
ZERO_FLOP_CLASSES = frozenset({OpClass.CONCAT, OpClass.RESHAPE, OpClass.DATA_MOVEMENT})

CONV_ATTR_KEYS = ("K_h", "K_w", "stride", "pad", "C_in", "C_out", "H_in", "W_in")
GEMM_ATTR_KEYS = ("M", "N", "K")


@dataclass(frozen=True)
class TensorSpec:
    """A named tensor with a shape, an element width, and a role."""

    id: str
    dims: tuple[int, ...]
    element_bytes: int = 4
    kind: TensorKind = TensorKind.ACTIVATION

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphValidationError("tensor id must be non-empty")
        if not self.dims or any(d < 1 for d in self.dims):
            raise GraphValidationError(f"tensor '{self.id}': all extents must be >= 1")
        if self.element_bytes not in VALID_ELEMENT_BYTES:
            raise GraphValidationError(
                f"tensor '{self.id}': element_bytes must be one of {VALID_ELEMENT_BYTES}"
            )

    @property
    def elements(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    @property
    def footprint_bytes(self) -> int:
        return self.elements * self.element_bytes


@dataclass(frozen=True)
class AbsorbedOp:
    """An operator folded into another node by tile-local fusion."""

    id: str
    op_class: OpClass
    flops: int


@dataclass(frozen=True)
class OperatorNode:
    """One operator: class, operand tensor ids, attributes, derived flops.

    ``absorbed`` is populated only by the fusion pass; parsed graphs always
    carry an empty tuple.
    """

    id: str
    op_class: OpClass
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    attrs: dict[str, int] = field(default_factory=dict)
    flops: int = 0
    absorbed: tuple[AbsorbedOp, ...] = ()

    def flops_by_class(self) -> dict[OpClass, int]:
        """Arithmetic work per operator class, including absorbed operators."""
        own = self.flops - sum(a.flops for a in self.absorbed)
        out: dict[OpClass, int] = {self.op_class: own}
        for a in self.absorbed:
            out[a.op_class] = out.get(a.op_class, 0) + a.flops
        return out


@dataclass(frozen=True)
class Schedule:
    """A topological execution order over node ids."""

    order: tuple[str, ...]

    def index_of(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.order)}


@dataclass(frozen=True)
class StatsReport:
    """Workload-scale summary: weights, activations, arithmetic work."""

    weight_mb: float
    act_mb: float
    gflops: float


@dataclass(frozen=True)
class WorkloadGraph:
    """Validated operator DAG with derived producer/consumer relations."""

    name: str
    tensors: dict[str, TensorSpec]
    nodes: tuple[OperatorNode, ...]
    producer: dict[str, str]
    consumers: dict[str, tuple[str, ...]]

    def node(self, node_id: str) -> OperatorNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def total_footprint_bytes(self) -> int:
        return sum(t.footprint_bytes for t in self.tensors.values())

    def external_inputs(self) -> tuple[str, ...]:
        return tuple(
            t.id for t in self.tensors.values()
            if t.kind in (TensorKind.INPUT, TensorKind.WEIGHT)
        )

    def external_outputs(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.tensors.values() if t.kind == TensorKind.OUTPUT)


def conv_output_dims(attrs: dict[str, int]) -> tuple[int, int]:
    """Output spatial extents of a convolution.

    H_out = floor((H_in - K_h + 2*pad) / stride) + 1, and likewise for W.
    Raises GeometryError when either extent would be < 1.
    """
    h_out = (attrs["H_in"] - attrs["K_h"] + 2 * attrs["pad"]) // attrs["stride"] + 1
    w_out = (attrs["W_in"] - attrs["K_w"] + 2 * attrs["pad"]) // attrs["stride"] + 1
    if h_out < 1 or w_out < 1:
        raise GeometryError(
            f"convolution geometry yields non-positive output extent "
            f"({h_out} x {w_out}) for attrs {attrs}"
        )
    return h_out, w_out


def node_flops(op_class: OpClass, attrs: dict[str, int],
               input_elements: int, output_elements: int) -> int:
    """Operation count under the engine's fixed conventions.

    Conv counts 2*C_in*C_out*K_h*K_w*H_out*W_out (multiply plus add), GEMM
    counts 2*M*N*K. Elementwise and Activation cost 1 op per output element,
    Reduce and Softmax 2 ops per input element, Transform 4 ops per output
    element. Pure data movement (Concat/Reshape/DataMovement) is free.
    """
    if op_class is OpClass.CONV:
        h_out, w_out = conv_output_dims(attrs)
        return 2 * attrs["C_in"] * attrs["C_out"] * attrs["K_h"] * attrs["K_w"] * h_out * w_out
    if op_class is OpClass.GEMM:
        return 2 * attrs["M"] * attrs["N"] * attrs["K"]
    if op_class in (OpClass.ELEMENTWISE, OpClass.ACTIVATION):
        return output_elements
    if op_class in (OpClass.REDUCE, OpClass.SOFTMAX):
        return 2 * input_elements
    if op_class is OpClass.TRANSFORM:
        return 4 * output_elements
    return 0


def _validate_attrs(node_id: str, op_class: OpClass, attrs: dict[str, int]) -> None:
    if op_class is OpClass.CONV:
        missing = [k for k in CONV_ATTR_KEYS if k not in attrs]
        if missing:
            raise GraphValidationError(f"node '{node_id}': Conv attrs missing {missing}")
        if attrs["K_h"] < 1 or attrs["K_w"] < 1:
            raise GraphValidationError(f"node '{node_id}': kernel extents must be >= 1")
        if attrs["stride"] < 1:
            raise GraphValidationError(f"node '{node_id}': stride must be >= 1")
        if attrs["pad"] < 0:
            raise GraphValidationError(f"node '{node_id}': pad must be >= 0")
        if attrs["C_in"] < 1 or attrs["C_out"] < 1 or attrs["H_in"] < 1 or attrs["W_in"] < 1:
            raise GraphValidationError(f"node '{node_id}': Conv extents must be >= 1")
        conv_output_dims(attrs)  # raises GeometryError when degenerate
    elif op_class is OpClass.GEMM:
        missing = [k for k in GEMM_ATTR_KEYS if k not in attrs]
        if missing:
            raise GraphValidationError(f"node '{node_id}': GEMM attrs missing {missing}")
        if any(attrs[k] < 1 for k in GEMM_ATTR_KEYS):
            raise GraphValidationError(f"node '{node_id}': GEMM extents must be >= 1")


def build_graph(name: str, tensors: list[TensorSpec],
                nodes: list[OperatorNode]) -> WorkloadGraph:
    """Assemble and validate a graph from already-typed parts.

    Derives the producer/consumer relation, checks referential integrity,
    producer uniqueness, and acyclicity, and fills in node flops.
    """
    tensor_map: dict[str, TensorSpec] = {}
    for t in tensors:
        if t.id in tensor_map:
            raise GraphValidationError(f"duplicate tensor id '{t.id}'")
        tensor_map[t.id] = t

    seen_nodes: set[str] = set()
    producer: dict[str, str] = {}
    consumers: dict[str, list[str]] = {t: [] for t in tensor_map}
    final_nodes: list[OperatorNode] = []
    for n in nodes:
        if n.id in seen_nodes:
            raise GraphValidationError(f"duplicate node id '{n.id}'")
        seen_nodes.add(n.id)
        _validate_attrs(n.id, n.op_class, n.attrs)
        in_elems = 0
        out_elems = 0
        for tid in n.inputs:
            if tid not in tensor_map:
                raise GraphValidationError(
                    f"node '{n.id}' consumes undeclared tensor '{tid}'"
                )
            consumers[tid].append(n.id)
            in_elems += tensor_map[tid].elements
        for tid in n.outputs:
            if tid not in tensor_map:
                raise GraphValidationError(
                    f"node '{n.id}' produces undeclared tensor '{tid}'"
                )
            if tid in producer:
                raise GraphValidationError(
                    f"tensor '{tid}' has multiple producers "
                    f"('{producer[tid]}' and '{n.id}')"
                )
            spec = tensor_map[tid]
            if spec.kind in (TensorKind.INPUT, TensorKind.WEIGHT):
                raise GraphValidationError(
                    f"tensor '{tid}' of kind '{spec.kind.value}' must not have a producer"
                )
            producer[tid] = n.id
            out_elems += spec.elements
        flops = n.flops if n.flops else node_flops(n.op_class, n.attrs, in_elems, out_elems)
        final_nodes.append(
            OperatorNode(n.id, n.op_class, tuple(n.inputs), tuple(n.outputs),
                         dict(n.attrs), flops, n.absorbed)
        )

    for t in tensor_map.values():
        if t.kind in (TensorKind.ACTIVATION, TensorKind.OUTPUT) and t.id not in producer:
            raise GraphValidationError(
                f"tensor '{t.id}' of kind '{t.kind.value}' has no producer"
            )

    g = WorkloadGraph(
        name=name,
        tensors=tensor_map,
        nodes=tuple(final_nodes),
        producer=producer,
        consumers={t: tuple(c) for t, c in consumers.items()},
    )
    topological_order(g)  # raises on cycles
    return g


def node_edges(g: WorkloadGraph) -> dict[str, tuple[str, ...]]:
    """Producer-node -> consumer-nodes relation derived from tensor ids."""
    out: dict[str, list[str]] = {n.id: [] for n in g.nodes}
    for n in g.nodes:
        for tid in n.outputs:
            for consumer in g.consumers.get(tid, ()):
                if consumer not in out[n.id]:
                    out[n.id].append(consumer)
    return {k: tuple(v) for k, v in out.items()}


def topological_order(g: WorkloadGraph) -> Schedule:
    """Deterministic topological schedule; ties broken by ascending node id."""
    edges = node_edges(g)
    indegree: dict[str, int] = {n.id: 0 for n in g.nodes}
    for src, dsts in edges.items():
        for dst in dsts:
            indegree[dst] += 1
    ready = [nid for nid, deg in sorted(indegree.items()) if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for dst in edges[nid]:
            indegree[dst] -= 1
            if indegree[dst] == 0:
                heapq.heappush(ready, dst)
    if len(order) != len(g.nodes):
        stuck = sorted(nid for nid, deg in indegree.items() if deg > 0)
        raise GraphValidationError(f"dependency cycle detected involving nodes {stuck}")
    return Schedule(order=tuple(order))


def tensor_stats(g: WorkloadGraph) -> StatsReport:
    """Scale summary: weight MB, non-weight MB, total GFLOPs.

    The activation column counts every non-weight tensor once (total-sum
    definition); peak-live footprints are available from the residency
    module instead.
    """
    weight_bytes = 0
    act_bytes = 0
    for t in g.tensors.values():
        if t.kind is TensorKind.WEIGHT:
            weight_bytes += t.footprint_bytes
        else:
            act_bytes += t.footprint_bytes
    flops = sum(n.flops for n in g.nodes)
    return StatsReport(
        weight_mb=weight_bytes / 2**20,
        act_mb=act_bytes / 2**20,
        gflops=flops / 1e9,
    )


# ---------------------------------------------------------------------------
# On-disk format
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "tensors", "nodes"}
_TENSOR_KEYS = {"id", "dims", "element_bytes", "kind"}
_NODE_KEYS = {"id", "op_class", "inputs", "outputs", "attrs"}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise IrSyntaxError(msg)


def parse_workload(text: str) -> WorkloadGraph:
    """Parse the JSON workload format into a validated graph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise IrSyntaxError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e

    _require(isinstance(doc, dict), "top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    missing = _TOP_KEYS - set(doc)
    _require(not missing, f"missing top-level keys: {sorted(missing)}")
    _require(isinstance(doc["name"], str), "'name' must be a string")
    _require(isinstance(doc["tensors"], list), "'tensors' must be a list")
    _require(isinstance(doc["nodes"], list), "'nodes' must be a list")

    tensors: list[TensorSpec] = []
    for i, entry in enumerate(doc["tensors"]):
        _require(isinstance(entry, dict), f"tensors[{i}] must be an object")
        unknown = set(entry) - _TENSOR_KEYS
        _require(not unknown, f"tensors[{i}]: unknown keys {sorted(unknown)}")
        for key in ("id", "dims", "kind"):
            _require(key in entry, f"tensors[{i}]: missing '{key}'")
        dims = entry["dims"]
        _require(
            isinstance(dims, list) and dims and all(isinstance(d, int) for d in dims),
            f"tensors[{i}]: 'dims' must be a non-empty list of integers",
        )
        try:
            kind = TensorKind(entry["kind"])
        except ValueError:
            raise IrSyntaxError(
                f"tensors[{i}]: unknown kind '{entry['kind']}'"
            ) from None
        tensors.append(
            TensorSpec(
                id=entry["id"],
                dims=tuple(dims),
                element_bytes=entry.get("element_bytes", 4),
                kind=kind,
            )
        )

    nodes: list[OperatorNode] = []
    for i, entry in enumerate(doc["nodes"]):
        _require(isinstance(entry, dict), f"nodes[{i}] must be an object")
        unknown = set(entry) - _NODE_KEYS
        _require(not unknown, f"nodes[{i}]: unknown keys {sorted(unknown)}")
        for key in ("id", "op_class", "inputs", "outputs"):
            _require(key in entry, f"nodes[{i}]: missing '{key}'")
        try:
            op_class = OpClass(entry["op_class"])
        except ValueError:
            raise IrSyntaxError(
                f"nodes[{i}]: unknown op_class '{entry['op_class']}'"
            ) from None
        attrs = entry.get("attrs", {})
        _require(
            isinstance(attrs, dict) and all(isinstance(v, int) for v in attrs.values()),
            f"nodes[{i}]: 'attrs' must map names to integers",
        )
        nodes.append(
            OperatorNode(
                id=entry["id"],
                op_class=op_class,
                inputs=tuple(entry["inputs"]),
                outputs=tuple(entry["outputs"]),
                attrs=dict(attrs),
            )
        )

    return build_graph(doc["name"], tensors, nodes)


def serialize_workload(g: WorkloadGraph) -> str:
    """Canonical JSON for a graph; parse(serialize(g)) reproduces g."""
    doc: dict[str, Any] = {
        "name": g.name,
        "tensors": [
            {
                "id": t.id,
                "dims": list(t.dims),
                "element_bytes": t.element_bytes,
                "kind": t.kind.value,
            }
            for t in g.tensors.values()
        ],
        "nodes": [
            {
                "id": n.id,
                "op_class": n.op_class.value,
                "inputs": list(n.inputs),
                "outputs": list(n.outputs),
                "attrs": dict(n.attrs),
            }
            for n in g.nodes
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_workload(path: str) -> WorkloadGraph:
    """Read and parse a workload file, reporting errors with the path."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise IrSyntaxError(f"cannot read workload file '{path}': {e.strerror}") from e
    try:
        return parse_workload(text)
    except (IrSyntaxError, GraphValidationError, GeometryError) as e:
        raise type(e)(f"{path}: {e}") from e
