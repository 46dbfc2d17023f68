import csv
import json
import re
from pathlib import Path

import pydot
import pytest

from sliceplace.cli import EXIT_CONFIG, EXIT_OK, main
from sliceplace.experiments import PRESETS, base_config
from sliceplace.resource import build_psn

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def small_desk(tmp_path, **changes):
    cfg = base_config("desk")
    cfg.horizon = 10.0
    cfg.sim.record_wall_time = False
    for k, v in changes.items():
        setattr(cfg, k, v)
    return write_cfg(tmp_path, cfg)


def test_run_both_writes_two_csvs_and_one_trace(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(small_desk(tmp_path)), "--algo", "both", "--out", str(out)]) == EXIT_OK
    files = sorted(p.name for p in out.iterdir())
    assert [f for f in files if f.endswith(".csv")] == ["metrics_exact.csv", "metrics_p2c.csv"]
    assert [f for f in files if f.startswith("trace")] == ["trace.jsonl"]
    for algo in ("exact", "p2c"):
        with (out / f"metrics_{algo}.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows and rows[0]["t"] == "0"
    text = capsys.readouterr().out
    assert re.search(r"exact: acceptance ratio .*mean decision time", text)
    assert re.search(r"p2c: acceptance ratio .*mean decision time", text)


def test_malformed_config_reports_field_path(tmp_path, capsys):
    data = base_config("desk").to_dict()
    data["nspr"]["cpu"] = ["one", 4]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "nspr.cpu" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    data = base_config("desk").to_dict()
    data["sim"]["algoritm"] = "p2c"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    assert main(["run", "--config", str(path)]) == EXIT_CONFIG
    assert "sim.algoritm" in capsys.readouterr().err


def test_semantic_error_exit_code(tmp_path, capsys):
    assert main(["run", "--config", str(small_desk(tmp_path, horizon=-1.0))]) == EXIT_CONFIG
    assert "horizon" in capsys.readouterr().err


def test_demo_summary_line(tmp_path, capsys):
    cfg = base_config("demo")
    cfg.horizon = 0.05
    cfg.arrival_rate = 20.0
    path = write_cfg(tmp_path, cfg)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_OK
    line = capsys.readouterr().out.splitlines()[0]
    assert "21 DCs" in line and "1008 servers" in line


def test_run_is_deterministic(tmp_path):
    path = small_desk(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", "--config", str(path), "--algo", "both", "--seed", "3", "--out", str(out)]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_compare_writes_merged_log(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(small_desk(tmp_path)), "--out", str(out)]) == EXIT_OK
    lines = [json.loads(l) for l in (out / "decisions.jsonl").read_text().splitlines()]
    assert {d["algo"] for d in lines} == {"exact", "p2c"}
    assert "both accepted" in capsys.readouterr().out


def test_unknown_preset_lists_options(capsys):
    assert main(["preset", "warp-speed"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    for name in PRESETS:
        assert name in err


def test_preset_rate_zero_leaves_ratio_empty(tmp_path):
    out = tmp_path / "cl"
    assert main(["preset", "critical-load", "--seeds", "1", "--horizon", "5", "--out", str(out)]) == EXIT_OK
    with (out / "summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["sweep_value"] == "0.0"
    assert rows[0]["exact_acceptance_ratio"] == "" and rows[0]["p2c_acceptance_ratio"] == ""
    assert len(list(out.glob("point*_p2c_seed1.csv"))) == len(rows)


def test_export_demo_psn_dot_counts(tmp_path):
    out = tmp_path / "psn.dot"
    assert main(["export", "psn", "--scale", "demo", "--out", str(out)]) == EXIT_OK
    graph = pydot.graph_from_dot_file(str(out))[0]
    nodes = [n for n in graph.get_nodes() if n.get_name() not in ("node", "edge", "graph")]
    psn = build_psn(base_config("demo").psn)
    assert len(nodes) == len(psn.servers) + len(psn.switches) == 1008 + 21
    assert len(graph.get_edges()) == len(psn.links)


def test_export_nspr_and_trace(tmp_path):
    dot = tmp_path / "nspr.dot"
    assert main(["export", "nspr", "--out", str(dot)]) == EXIT_OK
    graph = pydot.graph_from_dot_file(str(dot))[0]
    assert graph.get_type() == "digraph"
    trace = tmp_path / "trace.jsonl"
    assert main(["export", "trace", "--out", str(trace)]) == EXIT_OK
    assert trace.read_text().strip()
    assert main(["export", "trace", "--format", "dot", "--out", str(trace)]) == EXIT_CONFIG


@pytest.mark.parametrize("name", ["desk.json", "demo.json"])
def test_shipped_configs_load(name):
    from sliceplace.config import load_config

    load_config(CONFIGS / name).validate()


def test_presets_cover_the_four_aspects():
    # one preset per demonstrated aspect, each sweeping a distinct knob
    aspects = {name: desc for name, (desc, _) in PRESETS.items()}
    assert list(aspects) == ["requirements", "critical-load", "node-capacity", "nspr-size"]
    assert "CPU, RAM, E2E latency" in aspects["requirements"]
    assert "critical network load" in aspects["critical-load"]
    assert "hosting node" in aspects["node-capacity"]
    assert "number of VNFs" in aspects["nspr-size"]
    assert len({param for _, param in PRESETS.values()}) == 4
