from __future__ import annotations

import csv
import io
import json

import pytest

from lowdist.cli import main, parse_graph_spec, read_config
from lowdist.graph import read_edgelist
from lowdist.simkernel import RADIO


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def test_generate_headers(capsys):
    assert run_cli(capsys, "generate", "--graph", "cycle:n=12")[1].splitlines()[0] == "12 12"
    assert run_cli(capsys, "generate", "--graph", "grid:dims=3x3")[1].splitlines()[0] == "9 12"


def test_generate_random_graph_is_reproducible(capsys, tmp_path):
    spec = "rgg:n=100,k=2,radius=1.6"
    a = run_cli(capsys, "generate", "--graph", spec, "--seed", "7")[1]
    b = run_cli(capsys, "generate", "--graph", spec, "--seed", "7")[1]
    assert a == b
    path = tmp_path / "g.txt"
    path.write_text(a)
    g = read_edgelist(str(path))
    assert g.n == 100
    # an existing file is accepted in place of a family spec
    assert parse_graph_spec(str(path)).edges() == g.edges()


def test_cluster_cycle_twelve(capsys, tmp_path):
    out = tmp_path / "c.json"
    code, text, _ = run_cli(capsys, "cluster", "--graph", "cycle:n=12", "--algo", "mis-voronoi-zero", "--R", "3", "--out", str(out))
    assert code == 0
    row = rows(text)[0]
    assert row["cluster_count"] == "3" and row["R"] == "3" and row["n"] == "12"
    code, text, _ = run_cli(capsys, "analyze", "--graph", "cycle:n=12", "--clustering", str(out))
    assert code == 0 and rows(text)[0]["cluster_count"] == "3"


def test_mpx_on_a_single_edge(capsys):
    code, text, _ = run_cli(capsys, "cluster", "--graph", "path:n=2", "--algo", "mpx", "--R", "1", "--seed", "0")
    assert code == 0 and int(rows(text)[0]["cluster_count"]) in (1, 2)


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["cluster", "--graph", "cycle:n=12", "--algo", "nope", "--R", "3"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["generate", "--graph", "moebius:n=5"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--graph", "cycle:n=50", "--algo", "mis-voronoi-zero", "--R", ","])
    assert info.value.code == 2


def test_corrupted_clustering_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run_cli(capsys, "analyze", "--graph", "cycle:n=12", "--clustering", str(bad))
    assert code == 1 and "error" in err


def test_sweep_rows_are_reproducible_and_resume(capsys, tmp_path):
    args = ["sweep", "--graph", "cycle:n=200", "--algo", "mis-voronoi-uniform", "--R", "8,16", "--trials", "2", "--seed", "3"]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    table = rows(first.read_text())
    assert len(table) == 4
    assert [(r["param"], r["trial"]) for r in table] == [("8", "0"), ("8", "1"), ("16", "0"), ("16", "1")]

    # drop the last row and resume: only the missing cell is recomputed
    lines = first.read_text().splitlines(keepends=True)
    first.write_text("".join(lines[:-1]))
    assert main(args + ["--out", str(first)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_sweep_approx_and_parallel_workers(tmp_path):
    args = ["sweep", "--task", "approx", "--graph", "cycle:n=60", "--algo", "matching", "--eps", "0.2,0.4", "--trials", "2"]
    serial = tmp_path / "s.csv"
    parallel = tmp_path / "p.csv"
    assert main(args + ["--out", str(serial)]) == 0
    assert main(args + ["--out", str(parallel), "--workers", "2"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()
    assert len(rows(serial.read_text())) == 4


def test_approx_and_simulate(capsys, tmp_path):
    code, text, _ = run_cli(capsys, "approx", "--graph", "cycle:n=40", "--algo", "mis", "--eps", "0.2", "--mode", "derandomized")
    assert code == 0 and int(rows(text)[0]["value"]) >= 16
    energy = tmp_path / "e.csv"
    code, text, _ = run_cli(capsys, "simulate", "--graph", "cycle:n=64", "--algo", "dist-mis-voronoi", "--R", "4", "--seed", "1", "--out", str(energy))
    summary = json.loads(text)
    assert code == 0 and summary["clusters"] >= 1 and summary["energy_max"] >= 1
    assert len(rows(energy.read_text())) == 64
    code, text, _ = run_cli(capsys, "simulate", "--graph", "grid:dims=6x6", "--algo", "downcast", "--R", "2", "--model", "radio")
    assert code == 0 and json.loads(text)["model"] == RADIO


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cycle run\ngraph = cycle:n=12\nalgo = mis-voronoi-zero\nR = 6\n")
    assert read_config(str(cfg))["R"] == "6"
    code, text, _ = run_cli(capsys, "cluster", "--config", str(cfg), "--R", "3")
    assert code == 0 and rows(text)[0]["R"] == "3"
