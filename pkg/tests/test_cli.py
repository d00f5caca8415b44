"""Command-line interface and exporter round trips."""

import pathlib
import subprocess
import sys

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "tbnet.cli", *args],
        capture_output=True, text=True, cwd=cwd,
        env={"PYTHONPATH": str(pathlib.Path(__file__).parents[1] / "src"),
             "PATH": "/usr/bin:/bin"})


def test_analyze_reports_graph_summary(tmp_path):
    res = run_cli("analyze", str(FIXTURES / "fig1.tb"))
    assert res.returncode == 0, res.stderr
    assert "graph: 14 states" in res.stdout


def test_missing_model_is_usage_error():
    res = run_cli("analyze", str(FIXTURES / "missing.tb"))
    assert res.returncode == 2
    assert "error" in res.stderr


def test_bad_model_is_usage_error(tmp_path):
    bad = tmp_path / "bad.tb"
    bad.write_text("net x\nplace A\ntrans t pre B post tf [enab, enab]\n"
                   "init A{T0}\nconstraint T0 >= 0\n")
    res = run_cli("analyze", str(bad))
    assert res.returncode == 2


def test_no_ta_with_time_limit(tmp_path):
    res = run_cli("analyze", str(FIXTURES / "fig1.tb"), "--no-ta",
                  "--time-limit", "3")
    assert res.returncode == 0
    assert "graph: 25 states" in res.stdout


def test_outputs_are_byte_identical_across_runs(tmp_path):
    paths = []
    for tag in ("a", "b"):
        dot = tmp_path / f"{tag}.dot"
        rec = tmp_path / f"{tag}.rec"
        res = run_cli("analyze", str(FIXTURES / "fig1.tb"),
                      "--dot", str(dot), "--records", str(rec))
        assert res.returncode == 0
        paths.append((dot.read_bytes(), rec.read_bytes()))
    assert paths[0] == paths[1]


def test_dot_marks_edge_colors(tmp_path):
    dot = tmp_path / "g.dot"
    run_cli("analyze", str(FIXTURES / "fig1.tb"), "--dot", str(dot))
    text = dot.read_text()
    assert "arrowtail=odot" in text    # white-tail enabling exists
    assert "arrowhead=empty" in text   # white-head merge exists
    assert "digraph gasburner_ignite" in text


def test_records_contain_recovery_window(tmp_path):
    rec = tmp_path / "g.rec"
    run_cli("analyze", str(FIXTURES / "fig1.tb"), "--records", str(rec))
    text = rec.read_text()
    assert "TL - T0 >= 1/5" in text
    assert "TL - T0 <= 1/2" in text


def test_records_round_trip(tmp_path, fig1_net, fig1_graph):
    from tbnet.output import export_records, load_records
    dumped = export_records(fig1_graph)
    loaded = load_records(dumped, fig1_net)
    assert export_records(loaded) == dumped
    assert len(loaded.nodes) == len(fig1_graph.nodes)
    assert len(loaded.edges) == len(fig1_graph.edges)


def test_query_file_runs(tmp_path):
    queries = tmp_path / "q.txt"
    queries.write_text("exists #Flame >= 1\ndeadlocks\n")
    res = run_cli("analyze", str(FIXTURES / "fig1.tb"), "--query",
                  str(queries))
    assert res.returncode == 0
    assert "exists #Flame >= 1: found" in res.stdout
    assert "deadlocks: definite=none potential=none" in res.stdout


def test_coverage_check_clean(tmp_path):
    res = run_cli("analyze", str(FIXTURES / "fig3.tb"), "--coverage",
                  "--runs", "25", "--steps", "15")
    assert res.returncode == 0
    assert "coverage:" in res.stdout and "ok" in res.stdout


def test_simulate_prints_trace():
    res = run_cli("analyze", str(FIXTURES / "fig3.tb"), "--simulate",
                  "--runs", "1", "--steps", "5", "--seed", "9")
    assert res.returncode == 0
    assert "trace 0" in res.stdout
    assert "t0" in res.stdout


def test_capped_build_exits_nonzero():
    res = run_cli("analyze", str(FIXTURES / "fig3.tb"), "--no-ta",
                  "--max-states", "5")
    assert res.returncode == 1
    assert "incomplete" in res.stdout
