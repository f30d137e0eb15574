import json

import numpy as np
import pytest

from delaypatch.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from delaypatch.graph import load_edgelist, write_edgelist

from conftest import path_graph


@pytest.fixture
def graph_file(tmp_path):
    f = tmp_path / "g.txt"
    assert main(["generate", "--sbm-n", "200", "--sbm-k", "2", "--seed", "3", "--out", str(f)]) == EXIT_OK
    return f


def test_generate(graph_file):
    g = load_edgelist(graph_file)
    assert 150 <= g.n <= 200 and g.is_connected()


def test_bound_output_shape(graph_file, capsys):
    assert main(["bound", "--graph", str(graph_file), "--source-ids", "0", "--T", "5"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    n = load_edgelist(graph_file).n
    assert len(lines) == n
    node, x = lines[0].split(",")
    assert node == "0" and float(x) == 1.0
    assert all(0 <= float(line.split(",")[1]) <= 1 for line in lines)


def test_partition_select_simulate(graph_file, tmp_path, capsys):
    base = ["--graph", str(graph_file), "--source-ids", "0", "--T", "5", "--seed", "1"]
    assert main(["partition", *base, "--out", str(tmp_path / "p")]) == EXIT_OK
    nodes = (tmp_path / "p_nodes.csv").read_text().splitlines()
    assert len(nodes) == load_edgelist(graph_file).n + 1
    assert (tmp_path / "p_cutset.csv").exists()

    plan = tmp_path / "plan.json"
    assert main(["select", *base, "--budget", "0.1", "--out", str(plan)]) == EXIT_OK
    d = json.loads(plan.read_text())
    assert 0 < len(d["nodes"]) <= d["budget"] and 0 not in d["nodes"]

    out = tmp_path / "sim.csv"
    assert main(["simulate", *base, "--plan", str(plan), "--sample-points", "11",
                 "--out", str(out)]) == EXIT_OK
    rows = out.read_text().splitlines()
    assert rows[0] == "time,infected" and len(rows) == 12
    counts = [int(r.split(",")[1]) for r in rows[1:]]
    assert counts[0] == 1 and counts == sorted(counts)


def test_experiment_and_plot(graph_file, tmp_path, capsys):
    out = tmp_path / "exp"
    code = main(["experiment", "--graph", str(graph_file), "--T", "10", "--budget", "0.2",
                 "--trials", "3", "--horizon", "200", "--sample-points", "20", "--seed", "4",
                 "--out", str(out), "--svg"])
    assert code == EXIT_OK
    assert len((out / "results.csv").read_text().splitlines()) == 1 + 4 * 20
    assert json.loads((out / "results.json").read_text())["metadata"]["config"]["seed"] == 4
    assert (out / "results.svg").read_text().count("<polyline") == 4
    assert "delayed" in capsys.readouterr().out

    svg = tmp_path / "again.svg"
    assert main(["plot", "--csv", str(out / "results.csv"), "--out", str(svg), "--title", "t"]) == EXIT_OK
    assert svg.read_text().count("<polyline") == 4


def test_missing_graph_source(capsys):
    code = main(["experiment", "--T", "10", "--budget", "0.2", "--out", "x"])
    assert code == EXIT_USAGE
    assert "graph source" in capsys.readouterr().err


def test_both_graph_sources(graph_file):
    assert main(["bound", "--graph", str(graph_file), "--sbm-n", "10", "--sbm-k", "2", "--T", "1"]) == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["bound", "--graph", "g.txt"],
    ["experiment", "--graph", "g.txt", "--T", "1", "--budget", "0.2", "--out", "o", "--bogus"],
    ["bound", "--graph", "g.txt", "--T", "abc"],
    ["partition", "--graph", "g.txt", "--T", "1", "--solver", "lanczos", "--out", "o"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_runtime_errors(tmp_path):
    assert main(["bound", "--graph", str(tmp_path / "missing.txt"), "--T", "1"]) == EXIT_RUNTIME
    f = tmp_path / "g.txt"
    write_edgelist(path_graph(5), f)
    # source id out of range
    assert main(["bound", "--graph", str(f), "--source-ids", "9", "--T", "1"]) == EXIT_RUNTIME
    assert main(["experiment", "--graph", str(f), "--T", "1", "--budget", "0.01",
                 "--trials", "1", "--out", str(tmp_path / "o")]) == EXIT_RUNTIME


def test_config_file_precedence(graph_file, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# comment\ngraph = {graph_file}\nsource-ids = 0\nT = 50\n")
    assert main(["bound", "--config", str(cfg)]) == EXIT_OK
    at_50 = capsys.readouterr().out
    assert main(["bound", "--config", str(cfg), "--T", "5"]) == EXIT_OK
    at_5 = capsys.readouterr().out
    assert main(["bound", "--graph", str(graph_file), "--source-ids", "0", "--T", "5"]) == EXIT_OK
    assert capsys.readouterr().out == at_5 != at_50


def test_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no equals sign here\n")
    assert main(["bound", "--config", str(cfg)]) == EXIT_USAGE
    assert main(["bound", "--config", str(tmp_path / "none.cfg")]) == EXIT_USAGE


def test_seed_reproducible(graph_file, tmp_path):
    outs = []
    for tag in "ab":
        out = tmp_path / tag
        main(["experiment", "--graph", str(graph_file), "--T", "10", "--budget", "0.2", "--trials", "2",
              "--horizon", "100", "--sample-points", "5", "--seed", "9", "--policies", "degree,reactive",
              "--out", str(out)])
        outs.append((out / "results.csv").read_bytes())
    assert outs[0] == outs[1]
