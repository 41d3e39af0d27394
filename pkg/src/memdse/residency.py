"""Tensor liveness and capacity-bounded reuse-buffer simulation.

The last-level buffer is modeled as idealized software-managed retention:
a tensor becomes live when produced, is released after its last consumer,
and spills to DRAM when the live footprint exceeds the capacity. With the
schedule fixed, every tensor's future uses are known, so after each step
the buffer plans to retain the live tensors with the nearest next uses:
candidates are ordered by next use (ties: smaller footprint, then higher
id) and admitted front-to-back until the first one that does not fit.
Tensors outside that plan are the furthest-next-use ones, which makes the
drop rule the offline-optimal eviction analog while keeping the planned
set a pure function of (schedule, capacity). Because the plan for a
larger capacity always extends the plan for a smaller one, hits and
elided writebacks are monotone in capacity.

Accounting rules:

* inputs and weights start DRAM-backed and are fetched on first use;
* a tensor is served from the buffer when it has stayed planned-resident
  since its previous production or use, otherwise the use is a DRAM
  re-fetch;
* graph outputs are written through to DRAM once, at production;
* dropping a live tensor whose only copy is on chip charges one
  writeback; drops of DRAM-backed or no-longer-needed tensors are free;
* tensors larger than the buffer never become resident: every access is
  charged to DRAM and the tensor is flagged as streamed.

``llc_read_bytes``/``llc_write_bytes`` count tensor-granular buffer
activity (hit serves and installs); the workload-level LLC traffic,
which also multiplies in per-tile L1 refills, is assembled by the cost
model.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .errors import ConfigError
from .graph import Schedule, TensorKind, WorkloadGraph

EV_FETCH_DRAM = "fetch_dram"
EV_HIT_LLC = "hit_llc"
EV_INSTALL = "install"
EV_EVICT_SPILL = "evict_spill"
EV_EVICT_DEAD = "evict_dead"
EV_WRITEBACK_OUTPUT = "writeback_output"

_NEVER = 1 << 62


@dataclass(frozen=True)
class LiveInterval:
    """Schedule span of one tensor: producer step to last-consumer step.

    ``birth`` is -1 for graph inputs and weights (preloaded in DRAM).
    Graph outputs die at the schedule end; tensors nothing consumes die
    at their own birth.
    """

    tensor_id: str
    birth: int
    death: int


@dataclass(frozen=True)
class TraceEvent:
    step: int
    node_id: str
    tensor_id: str
    event: str
    bytes: int


@dataclass(frozen=True)
class ResidencyTrace:
    """Event log plus per-step resident sets and boundary-traffic totals."""

    events: tuple[TraceEvent, ...]
    resident_per_step: tuple[tuple[str, ...], ...]
    streamed: frozenset[str]
    dram_read_bytes: int
    dram_write_bytes: int
    llc_read_bytes: int
    llc_write_bytes: int
    peak_resident_bytes: int

    def spill_events(self) -> tuple[TraceEvent, ...]:
        return tuple(e for e in self.events if e.event == EV_EVICT_SPILL and e.bytes > 0)


def live_intervals(g: WorkloadGraph, schedule: Schedule) -> list[LiveInterval]:
    """One interval per tensor, in graph declaration order."""
    index = schedule.index_of()
    last = len(schedule.order) - 1
    out: list[LiveInterval] = []
    for t in g.tensors.values():
        birth = index[g.producer[t.id]] if t.id in g.producer else -1
        uses = [index[c] for c in g.consumers.get(t.id, ())]
        death = max(uses) if uses else birth
        if t.kind is TensorKind.OUTPUT:
            death = last
        out.append(LiveInterval(t.id, birth, death))
    return out


def compulsory_floor(g: WorkloadGraph) -> tuple[int, int]:
    """(read, write) DRAM bytes no simulation can go below: consumed inputs
    and weights fetched once, graph outputs written once."""
    read = 0
    write = 0
    for t in g.tensors.values():
        if t.kind in (TensorKind.INPUT, TensorKind.WEIGHT) and g.consumers.get(t.id):
            read += t.footprint_bytes
        if t.kind is TensorKind.OUTPUT:
            write += t.footprint_bytes
    return read, write


def simulate_residency(g: WorkloadGraph, schedule: Schedule,
                       intervals: list[LiveInterval],
                       llc_capacity: int) -> ResidencyTrace:
    """Walk the schedule and account all LLC/DRAM boundary traffic."""
    if llc_capacity <= 0:
        raise ConfigError(f"llc_capacity must be positive, got {llc_capacity}")

    by_id = {n.id: n for n in g.nodes}
    index = schedule.index_of()
    death = {iv.tensor_id: iv.death for iv in intervals}
    uses: dict[str, list[int]] = {tid: [] for tid in g.tensors}
    for tid, consumers in g.consumers.items():
        uses[tid] = sorted({index[c] for c in consumers})
    first_event: dict[str, int] = {}
    for iv in intervals:
        if iv.birth >= 0:
            first_event[iv.tensor_id] = iv.birth
        else:
            lst = uses[iv.tensor_id]
            first_event[iv.tensor_id] = lst[0] if lst else _NEVER

    footprint = {tid: t.footprint_bytes for tid, t in g.tensors.items()}
    streamed = frozenset(tid for tid, fp in footprint.items() if fp > llc_capacity)
    backed = {tid for tid, t in g.tensors.items()
              if t.kind in (TensorKind.INPUT, TensorKind.WEIGHT)}

    resident: set[str] = set()
    peak = 0
    dram_read = dram_write = llc_read = llc_write = 0
    events: list[TraceEvent] = []
    resident_per_step: list[tuple[str, ...]] = []

    # Tensors whose first schedule event has occurred, keyed for the plan.
    touched_live: set[str] = set()

    def next_use(tid: str, step: int) -> int:
        lst = uses[tid]
        i = bisect_right(lst, step)
        return lst[i] if i < len(lst) else _NEVER

    def planned_set(step: int) -> set[str]:
        """Longest nearest-next-use prefix of live touched tensors that
        fits the capacity; independent of what is actually resident.

        The candidate order is capacity-independent and admission stops
        at the first tensor that does not fit, so the planned set for a
        larger capacity always contains the planned set for a smaller
        one. Oversized tensors participate in the order (and block it)
        but can never be admitted.
        """
        cands = [t for t in touched_live if death[t] > step]
        cands.sort(reverse=True)  # ties prefer retaining the higher id
        cands.sort(key=lambda t: (next_use(t, step), footprint[t]))
        planned: set[str] = set()
        used_bytes = 0
        for t in cands:
            if used_bytes + footprint[t] > llc_capacity:
                break
            planned.add(t)
            used_bytes += footprint[t]
        return planned

    for step, nid in enumerate(schedule.order):
        node = by_id[nid]
        event_tensors: set[str] = set()
        for tid in dict.fromkeys(node.inputs):
            fp = footprint[tid]
            touched_live.add(tid)
            event_tensors.add(tid)
            if tid in resident:
                llc_read += fp
                events.append(TraceEvent(step, nid, tid, EV_HIT_LLC, fp))
            else:
                dram_read += fp
                events.append(TraceEvent(step, nid, tid, EV_FETCH_DRAM, fp))
        for tid in node.outputs:
            fp = footprint[tid]
            kind = g.tensors[tid].kind
            if kind is TensorKind.OUTPUT:
                dram_write += fp
                backed.add(tid)
                events.append(TraceEvent(step, nid, tid, EV_WRITEBACK_OUTPUT, fp))
            if death[tid] <= step:
                # dead on arrival: materialized briefly, released for free
                if fp <= llc_capacity:
                    llc_write += fp
                    events.append(TraceEvent(step, nid, tid, EV_INSTALL, fp))
                    events.append(TraceEvent(step, nid, tid, EV_EVICT_DEAD, 0))
                continue
            touched_live.add(tid)
            event_tensors.add(tid)

        planned = planned_set(step)
        new_resident = {t for t in planned if t in resident or t in event_tensors}
        for tid in sorted(resident - new_resident):
            if death[tid] <= step:
                events.append(TraceEvent(step, nid, tid, EV_EVICT_DEAD, 0))
            elif tid in backed:
                events.append(TraceEvent(step, nid, tid, EV_EVICT_SPILL, 0))
            else:
                dram_write += footprint[tid]
                backed.add(tid)
                events.append(TraceEvent(step, nid, tid, EV_EVICT_SPILL, footprint[tid]))
        for tid in sorted(new_resident - resident):
            llc_write += footprint[tid]
            events.append(TraceEvent(step, nid, tid, EV_INSTALL, footprint[tid]))
        # produced tensors squeezed out of the plan go straight to DRAM
        for tid in sorted(event_tensors - new_resident):
            if tid in node.outputs and tid not in backed:
                dram_write += footprint[tid]
                backed.add(tid)
                events.append(TraceEvent(step, nid, tid, EV_EVICT_SPILL, footprint[tid]))
        touched_live = {t for t in touched_live if death[t] > step}
        resident = new_resident
        resident_bytes = sum(footprint[t] for t in resident)
        peak = max(peak, resident_bytes)
        assert resident_bytes <= llc_capacity
        resident_per_step.append(tuple(sorted(resident)))

    return ResidencyTrace(
        events=tuple(events),
        resident_per_step=tuple(resident_per_step),
        streamed=streamed,
        dram_read_bytes=dram_read,
        dram_write_bytes=dram_write,
        llc_read_bytes=llc_read,
        llc_write_bytes=llc_write,
        peak_resident_bytes=peak,
    )


def trace_csv(trace: ResidencyTrace) -> str:
    """One CSV row per event: step, node, tensor, event, bytes."""
    lines = ["step,node_id,tensor_id,event,bytes"]
    for e in trace.events:
        lines.append(f"{e.step},{e.node_id},{e.tensor_id},{e.event},{e.bytes}")
    return "\n".join(lines) + "\n"
