import argparse
import filecmp
import json
import os

import pytest

from memdse.cli import main, parse_capacity

TINY = "workloads/tiny_cnn.json"

# hand computation for the bundled tiny_cnn fixture
TINY_WGT_MB = (4 * 3 * 3 * 3 * 4 + 2 * 4 * 3 * 3 * 4) / 2**20
TINY_ACT_MB = (3 * 8 * 8 * 4 + 4 * 8 * 8 * 4 + 4 * 8 * 8 * 4 + 2 * 8 * 8 * 4) / 2**20
TINY_GFLOPS = (2 * 3 * 4 * 9 * 64 + 4 * 8 * 8 + 2 * 4 * 2 * 9 * 64) / 1e9


def test_parse_capacity():
    assert parse_capacity("32KB") == 32 * 1024
    assert parse_capacity("16MB") == 16 * 1024 * 1024
    assert parse_capacity("1GB") == 1024**3
    assert parse_capacity("4096") == 4096
    assert parse_capacity("32kb") == 32 * 1024
    with pytest.raises(argparse.ArgumentTypeError):
        parse_capacity("lots")


def test_stats_prints_fixture_row(capsys):
    assert main(["stats", TINY]) == 0
    out = capsys.readouterr().out
    row = out.strip().splitlines()[-1].split()
    assert row[0] == "tiny_cnn"
    assert float(row[1]) == pytest.approx(TINY_WGT_MB, abs=5e-5)
    assert float(row[2]) == pytest.approx(TINY_ACT_MB, abs=5e-5)
    assert float(row[3]) == pytest.approx(TINY_GFLOPS, abs=5e-7)


def test_stats_zero_weights(tmp_path, capsys):
    doc = {
        "name": "noweights",
        "tensors": [
            {"id": "x", "dims": [8], "kind": "input"},
            {"id": "y", "dims": [8], "kind": "output"},
        ],
        "nodes": [{"id": "n", "op_class": "Activation", "inputs": ["x"],
                   "outputs": ["y"]}],
    }
    p = tmp_path / "w.json"
    p.write_text(json.dumps(doc))
    assert main(["stats", str(p)]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split()
    assert float(row[1]) == 0.0


def test_stats_missing_file(capsys):
    assert main(["stats", "/nonexistent/x.json"]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as e:
        main(["sweep"])  # missing workload argument
    assert e.value.code == 1


def test_gen_deterministic(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    argv = ["gen", "--family", "mlp_ray", "--seed", "5", "-p", "layers=2"]
    assert main(argv + ["-o", str(a)]) == 0
    assert main(argv + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["stats", str(a)]) == 0
    capsys.readouterr()


def test_gen_invalid_params(capsys):
    assert main(["gen", "--family", "attention_matcher", "-p", "tokens=0"]) == 1
    assert main(["gen", "--family", "mlp_ray", "-p", "bogus=1"]) == 1
    assert main(["gen", "--family", "mlp_ray", "-p", "layers=abc"]) == 1
    capsys.readouterr()


def test_sweep_writes_reports(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", TINY, "--out", str(out), "--seed", "3",
                 "--workers", "1"]) == 0
    stdout = capsys.readouterr().out
    assert "baseline" in stdout and "regime:" in stdout
    for name in ("heatmap.csv", "breakdown.csv", "pareto.csv", "regime.txt",
                 "heatmap.png", "breakdown.png", "pareto.png"):
        assert (out / name).exists(), name
    lines = (out / "heatmap.csv").read_text().splitlines()
    assert len(lines) == 16


def test_sweep_byte_identical_across_runs_and_workers(tmp_path, capsys):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["sweep", TINY, "--out", str(out1), "--seed", "11",
                 "--workers", "1", "--no-figures"]) == 0
    assert main(["sweep", TINY, "--out", str(out2), "--seed", "11",
                 "--workers", "2", "--no-figures"]) == 0
    capsys.readouterr()
    for name in ("heatmap.csv", "breakdown.csv", "pareto.csv", "regime.txt"):
        assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name


def test_sweep_config_file(tmp_path, capsys):
    cfg = {
        "grid": {"l1_kb": [32], "llc_mb": [16], "baseline_l1_kb": 32,
                 "baseline_llc_mb": 16},
        "seed": 2,
        "flags": {"emit_trace": True},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["sweep", TINY, "--config", str(cfg_path), "--out", str(out),
                 "--workers", "1", "--no-figures"]) == 0
    capsys.readouterr()
    assert len((out / "heatmap.csv").read_text().splitlines()) == 2
    traces = list((out / "traces").glob("*.csv"))
    assert len(traces) == 1


def test_sweep_grid_1x1(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", TINY, "--out", str(out), "--grid", "1x1",
                 "--workers", "1", "--no-figures"]) == 0
    capsys.readouterr()
    for name in ("heatmap.csv", "breakdown.csv"):
        assert len((out / name).read_text().splitlines()) == 2
    assert main(["sweep", TINY, "--out", str(out), "--grid", "bogus"]) == 1
    capsys.readouterr()


def test_sweep_roofline_flag(tmp_path, capsys):
    cfg = {
        "grid": {"l1_kb": [32], "llc_mb": [16], "baseline_l1_kb": 32,
                 "baseline_llc_mb": 16},
        "flags": {"emit_roofline_total": True},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["sweep", TINY, "--config", str(cfg_path), "--out", str(out),
                 "--workers", "1", "--no-figures"]) == 0
    capsys.readouterr()
    header = (out / "heatmap.csv").read_text().splitlines()[0]
    assert header.endswith(",roofline_total")


def test_sweep_missing_tech_file(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"tech_params": "nope.json"}))
    assert main(["sweep", TINY, "--config", str(cfg_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_sweep_unknown_config_key(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"grdi": {}}))
    assert main(["sweep", TINY, "--config", str(cfg_path)]) == 1
    capsys.readouterr()


def test_sweep_model_error_exit_2(tmp_path, capsys):
    doc = {
        "name": "hugekernel",
        "tensors": [
            {"id": "x", "dims": [1, 256, 256], "kind": "input"},
            {"id": "w", "dims": [1, 1, 63, 63], "kind": "weight"},
            {"id": "y", "dims": [1, 256, 256], "kind": "output"},
        ],
        "nodes": [{"id": "c", "op_class": "Conv", "inputs": ["x", "w"],
                   "outputs": ["y"],
                   "attrs": {"K_h": 63, "K_w": 63, "stride": 1, "pad": 31,
                             "C_in": 1, "C_out": 1, "H_in": 256, "W_in": 256}}],
    }
    wl = tmp_path / "huge.json"
    wl.write_text(json.dumps(doc))
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(
        {"grid": {"l1_kb": [16], "llc_mb": [16], "baseline_l1_kb": 16,
                  "baseline_llc_mb": 16}}))
    assert main(["sweep", str(wl), "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")]) == 2
    assert "model error" in capsys.readouterr().err


def test_map_reports_decisions(tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    assert main(["map", TINY, "--l1", "32KB", "--llc", "16MB",
                 "--trace", str(trace_path)]) == 0
    out = capsys.readouterr().out
    assert "conv1" in out and "stationary" in out
    assert "fused pairs: 1" in out
    assert trace_path.exists()
    assert trace_path.read_text().startswith("step,node_id,tensor_id,event,bytes")


def test_pareto_subcommand_matches_sweep_front(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", TINY, "--out", str(out), "--seed", "3",
                 "--workers", "1", "--no-figures"]) == 0
    capsys.readouterr()
    front_path = tmp_path / "front.csv"
    assert main(["pareto", str(out / "heatmap.csv"), "-o", str(front_path)]) == 0
    capsys.readouterr()
    got = {tuple(ln.split(",")[:2]) for ln in front_path.read_text().splitlines()[1:]}
    expect = {tuple(ln.split(",")[:2])
              for ln in (out / "pareto.csv").read_text().splitlines()[1:]}
    assert got == expect


def test_pareto_subcommand_bad_csv(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    assert main(["pareto", str(p)]) == 1
    capsys.readouterr()
