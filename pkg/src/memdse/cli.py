"""Command-line interface.

Subcommands:
  stats  <workload>                       scale summary (Wgt/Act/GFLOPs row)
  sweep  <workload> --config FILE ...     full capacity sweep with reports
  map    <workload> --l1 CAP --llc CAP    single-point per-layer mapping report
  gen    --family NAME [params]           synthetic workload generation
  pareto <heatmap.csv>                    dominance filter over an existing sweep

Capacity arguments accept power-of-two suffixes (KB, MB, GB) or raw byte
counts. Exit codes: 0 success, 1 usage or configuration error, 2 model
error (no feasible tiling, DRAM overflow).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import load_engine_config, with_overrides
from .costmodel import (
    assemble_traffic,
    compute_service_time,
    energy,
    latency_proxy,
    workload_flops_by_class,
    workload_l1_traffic,
)
from .errors import InputError, ModelError
from .graph import load_workload, serialize_workload, tensor_stats, topological_order
from .mapper import apply_fusion, plan_mapping
from .report import write_report
from .residency import live_intervals, simulate_residency, trace_csv
from .sweep import pareto_indices, run_sweep
from .synth import FAMILIES, SyntheticFamilySpec, generate_workload

_SUFFIXES = {"KB": 1024, "MB": 1024**2, "GB": 1024**3}


def parse_capacity(text: str) -> int:
    s = text.strip().upper()
    for suffix, mult in _SUFFIXES.items():
        if s.endswith(suffix):
            num = s[: -len(suffix)].strip()
            try:
                return int(float(num) * mult)
            except ValueError:
                break
    try:
        return int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid capacity '{text}' (use bytes or KB/MB/GB suffix)"
        ) from None


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    model errors, so remap usage problems to 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="memdse", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"memdse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="print a workload scale summary")
    p_stats.add_argument("workload")

    p_sweep = sub.add_parser("sweep", help="run the full capacity sweep")
    p_sweep.add_argument("workload")
    p_sweep.add_argument("--config", default=None, help="engine config JSON")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None, help="global seed override")
    p_sweep.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                         help="parallel workers (default: available cores)")
    p_sweep.add_argument("--grid", default=None, metavar="NxM",
                         help="truncate the grid to the first N L1 and M LLC points")
    p_sweep.add_argument("--no-figures", action="store_true",
                         help="skip PNG rendering")

    p_map = sub.add_parser("map", help="report per-layer mapping at one point")
    p_map.add_argument("workload")
    p_map.add_argument("--l1", type=parse_capacity, required=True)
    p_map.add_argument("--llc", type=parse_capacity, required=True)
    p_map.add_argument("--config", default=None)
    p_map.add_argument("--seed", type=int, default=None)
    p_map.add_argument("--trace", default=None, help="write the residency trace CSV here")

    p_gen = sub.add_parser("gen", help="generate a synthetic workload")
    p_gen.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--param", "-p", action="append", default=[],
                       metavar="KEY=VALUE", help="family parameter override")
    p_gen.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    p_pareto = sub.add_parser("pareto", help="extract the Pareto front from heatmap.csv")
    p_pareto.add_argument("csv")
    p_pareto.add_argument("-o", "--output", default=None, help="write the front here")
    return parser


def _cmd_stats(args: argparse.Namespace) -> int:
    g = load_workload(args.workload)
    stats = tensor_stats(g)
    print(f"{'network':<32} {'wgt_mb':>12} {'act_mb':>12} {'gflops':>12}")
    print(f"{g.name:<32} {stats.weight_mb:>12.4f} {stats.act_mb:>12.4f} "
          f"{stats.gflops:>12.6f}")
    return 0


def _truncated_grid(grid, spec: str):
    from .sweep import SweepGrid

    try:
        n, _, m = spec.lower().partition("x")
        n, m = int(n), int(m)
        if n < 1 or m < 1:
            raise ValueError
    except ValueError:
        raise InputError(f"bad --grid '{spec}', expected NxM") from None
    l1 = grid.l1_points[:n]
    llc = grid.llc_points[:m]
    baseline = grid.baseline
    if baseline[0] not in l1 or baseline[1] not in llc:
        baseline = (l1[0], llc[0])
    return SweepGrid(l1, llc, baseline)


def _cmd_sweep(args: argparse.Namespace) -> int:
    g = load_workload(args.workload)
    cfg = load_engine_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed, output_dir=args.out)
    if args.grid:
        from dataclasses import replace

        cfg = replace(cfg, grid=_truncated_grid(cfg.grid, args.grid))
    result = run_sweep(
        g, cfg.grid, cfg.policy, cfg.annealing, cfg.weights, cfg.tech,
        global_seed=cfg.seed, workers=max(1, args.workers),
        collect_traces=cfg.emit_trace,
    )
    summary, written = write_report(
        g.name, result, cfg.grid, cfg.output_dir,
        emit_roofline=cfg.emit_roofline_total, emit_trace=cfg.emit_trace,
        figures=not args.no_figures,
    )
    print(summary)
    for path in written:
        print(f"wrote: {path}")
    return 0


def _fmt_tiling(decision) -> str:
    t = decision.tiling
    if t is None:
        return "-"
    if hasattr(t, "c_in_t"):
        return f"c_in={t.c_in_t} c_out={t.c_out_t} h={t.h_out_t} w={t.w_out_t}"
    return f"m={t.m_t} n={t.n_t} k={t.k_t}"


def _cmd_map(args: argparse.Namespace) -> int:
    g = load_workload(args.workload)
    cfg = load_engine_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed)
    fused, records = apply_fusion(g) if cfg.policy.fusion_enabled else (g, [])
    schedule = topological_order(fused)
    decisions = plan_mapping(fused, schedule, args.l1, cfg.policy,
                             cfg.annealing, cfg.weights, cfg.seed)
    intervals = live_intervals(fused, schedule)
    trace = simulate_residency(fused, schedule, intervals, args.llc)
    l1_read, l1_write = workload_l1_traffic(fused, decisions)
    traffic = assemble_traffic(l1_read, l1_write, trace)
    lat = latency_proxy(traffic, cfg.tech)
    flops = workload_flops_by_class(fused)
    en = energy(traffic, flops, cfg.tech, lat.t_mem,
                l1_capacity=args.l1, llc_capacity=args.llc)
    t_comp = compute_service_time(sum(flops.values()), cfg.tech)

    print(f"workload: {g.name}   l1={args.l1} B   llc={args.llc} B")
    if records:
        print(f"fused pairs: {len(records)} "
              f"({', '.join(f'{r.kept_node}+{r.absorbed_node}' for r in records[:4])}"
              f"{', ...' if len(records) > 4 else ''})")
    print(f"{'node':<28} {'class':<14} {'stationary':<12} tiling")
    for nid in schedule.order:
        d = decisions[nid]
        node = fused.node(nid)
        print(f"{nid:<28} {node.op_class.value:<14} {d.stationary.value:<12} "
              f"{_fmt_tiling(d)}")
    print(f"traffic: l1_read={traffic.l1_read} l1_write={traffic.l1_write} "
          f"llc_read={traffic.llc_read} llc_write={traffic.llc_write} "
          f"dram_read={traffic.dram_read} dram_write={traffic.dram_write}")
    print(f"energy: total={en.total:.12g} J (l1={en.e_l1:.12g} llc={en.e_llc:.12g} "
          f"dram={en.e_dram:.12g} core={en.e_core:.12g} leak={en.e_leakage:.12g})")
    print(f"latency: t_mem={lat.t_mem:.12g} s (l1={lat.t_l1:.12g} llc={lat.t_llc:.12g} "
          f"dram={lat.t_dram:.12g})  t_compute={t_comp:.12g} s")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as f:
            f.write(trace_csv(trace))
        print(f"wrote: {args.trace}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    params: dict[str, int] = {}
    for item in args.param:
        if "=" not in item:
            raise InputError(f"bad --param '{item}', expected KEY=VALUE")
        key, _, value = item.partition("=")
        try:
            params[key.strip()] = int(value)
        except ValueError:
            raise InputError(f"--param '{item}': value must be an integer") from None
    spec = SyntheticFamilySpec(family=args.family, seed=args.seed, params=params)
    g = generate_workload(spec)
    text = serialize_workload(g)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        print(f"wrote: {args.output} ({len(g.nodes)} nodes, "
              f"{len(g.tensors)} tensors)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_pareto(args: argparse.Namespace) -> int:
    try:
        with open(args.csv, "r", encoding="utf-8") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
    except OSError as e:
        raise InputError(f"cannot read '{args.csv}': {e.strerror}") from e
    if not lines:
        raise InputError(f"'{args.csv}' is empty")
    header = lines[0].split(",")
    try:
        e_col = header.index("total_energy")
        t_col = header.index("t_mem")
    except ValueError:
        raise InputError(
            f"'{args.csv}' must have 'total_energy' and 't_mem' columns"
        ) from None
    rows = [ln.split(",") for ln in lines[1:]]
    pairs = [(float(r[e_col]), float(r[t_col])) for r in rows]
    keep = pareto_indices(pairs)
    keep.sort(key=lambda i: (pairs[i][0], pairs[i][1]))
    out_lines = [lines[0]] + [lines[1 + i] for i in keep]
    text = "\n".join(out_lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        print(f"wrote: {args.output} ({len(keep)} front points)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


_HANDLERS = {
    "stats": _cmd_stats,
    "sweep": _cmd_sweep,
    "map": _cmd_map,
    "gen": _cmd_gen,
    "pareto": _cmd_pareto,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ModelError as e:
        print(f"model error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
