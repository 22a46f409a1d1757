import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from micflow import EstimatorConfig, Sample, equichar_clump, mic_e, tic_e
from micflow.cli import EXPLORE_COLUMNS, main
from micflow.reporting import read_table, table_text, write_table

DATA = Path(__file__).parent / "data"
FIXTURE = DATA / "synthetic_500.csv"


def run(capsys, *argv):
    code = main(["-q", *map(str, argv)])
    out, err = capsys.readouterr()
    return code, out, err


def _exit_code(capsys, *argv):
    try:
        return run(capsys, *argv)[0]
    except SystemExit as exc:
        capsys.readouterr()
        return exc.code


def test_compute_golden(capsys):
    code, out, _ = run(capsys, "compute", FIXTURE, "--x", "x", "--y", "y", "--seed", 7, "--perms", 199)
    assert code == 0
    assert out == (DATA / "compute_x_y_seed7.csv").read_text()


def test_compute_golden_agrees_with_library():
    _, (row,) = read_table(DATA / "compute_x_y_seed7.csv")
    data = np.genfromtxt(FIXTURE, delimiter=",", names=True, dtype=None, encoding="utf-8")
    tri = equichar_clump(Sample(data["x"], data["y"]), EstimatorConfig(0.6, 5.0))
    assert row["mic_e"] == mic_e(tri)
    assert row["tic_e"] == tic_e(tri)
    assert (row["argmax_k"], row["argmax_l"]) == tri.argmax()
    assert row["B"] == 41 and row["seed"] == 7


def test_compute_threads_do_not_change_output(capsys, monkeypatch):
    monkeypatch.setenv("MICFLOW_THREADS", "3")
    _, out, _ = run(capsys, "compute", FIXTURE, "--x", "x", "--y", "y", "--seed", 7, "--perms", 199)
    assert out == (DATA / "compute_x_y_seed7.csv").read_text()


def test_compute_perfect_correlation(tmp_path, capsys):
    p = tmp_path / "line.csv"
    x = np.arange(60.0)
    p.write_text("a,b\n" + "".join(f"{v},{2 * v + 1}\n" for v in x))
    code, out, _ = run(capsys, "compute", p, "--x", "a", "--y", "b", "--perms", 19)
    assert code == 0
    row = read_table_text(out)[0]
    assert row["mic_e"] == 1.0


def read_table_text(text):
    import csv

    from micflow.reporting import parse_value

    recs = list(csv.reader(io.StringIO(text)))
    return [dict(zip(recs[0], map(parse_value, r))) for r in recs[1:]]


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert _exit_code(capsys, "compute", FIXTURE, "--x", "nope", "--y", "y") == 2
    assert _exit_code(capsys, "compute", tmp_path / "missing.csv", "--x", "x", "--y", "y") == 2
    assert _exit_code(capsys, "compute", FIXTURE, "--x", "x", "--y", "label") == 3
    assert _exit_code(capsys, "compute", FIXTURE, "--x", "x", "--y", "y", "--perms", 5) == 2
    assert _exit_code(capsys, "compute", FIXTURE, "--x", "x") == 2
    assert _exit_code(capsys, "population", "--function", "no_such_fn") == 2
    assert _exit_code(capsys, "explore", tmp_path / "missing.csv") == 2
    monkeypatch.setenv("MICFLOW_THREADS", "lots")
    assert _exit_code(capsys, "compute", FIXTURE, "--x", "x", "--y", "y") == 2


def test_explore_schema_and_ranking(tmp_path, capsys):
    out_path = tmp_path / "pairs.csv"
    code, out, _ = run(capsys, "explore", FIXTURE, "--perms", 99, "--seed", 1, "--out", out_path)
    assert code == 0
    header, rows = read_table(out_path)
    assert header == [*EXPLORE_COLUMNS, "schema_version"]
    assert len(rows) == 6  # label is non-numeric and dropped
    assert {rows[0]["var_a"], rows[0]["var_b"]} == {"x", "w"}
    assert rows[0]["n_used"] == 490
    assert out.startswith("pairs=6 passing=")


def test_explore_two_columns(tmp_path, capsys):
    p = tmp_path / "two.csv"
    g = np.random.default_rng(0)
    p.write_text("u,v\n" + "".join(f"{a},{b}\n" for a, b in g.random((30, 2))))
    code, out, _ = run(capsys, "explore", p, "--perms", 19)
    assert code == 0
    assert len(read_table_text(out)) == 1


def test_csv_round_trip(tmp_path, capsys):
    out_path = tmp_path / "pairs.csv"
    run(capsys, "explore", FIXTURE, "--perms", 19, "--out", out_path)
    header, rows = read_table(out_path)
    assert table_text(rows, header[:-1]) == out_path.read_text()


def test_write_table_formats():
    buf = io.StringIO()
    write_table([{"a": 1, "b": 0.1, "c": True, "d": float("nan"), "e": np.float64(2.5)}], buf)
    assert buf.getvalue() == "a,b,c,d,e,schema_version\n1,0.1,true,nan,2.5,1\n"


def test_population_command(capsys):
    code, out, _ = run(capsys, "population", "--function", "linear", "--m", 256,
                       "--kmax", 16, "--master", 64)
    assert code == 0
    rows = {(r["record"], r["index"]): r["value"] for r in read_table_text(out)}
    assert abs(rows[("mic_star", "")] - 1.0) <= 2 / 256
    assert rows[("refinement_delta", 128)] < 0.01
    assert ("boundary_col", 16) in rows
    code, out, _ = run(capsys, "population", "--function", "independent", "--m", 256,
                       "--kmax", 8, "--master", 64)
    assert read_table_text(out)[0]["value"] == 0.0


def _write_yaml(path, text):
    path.write_text(text)
    return path


def test_experiment_power_desk(tmp_path, capsys):
    cfg = _write_yaml(tmp_path / "p.yaml",
                      "functions: [linear, parabolic]\nsigmas: [0.0, 1.0]\nn: 60\nreplicates: 20\nseed: 5\n")
    code, out, _ = run(capsys, "experiment", "power", "--config", cfg, "--out-dir", tmp_path / "o")
    assert code == 0
    header, rows = read_table(tmp_path / "o" / "power.csv")
    assert len(rows) == 4 * 2 * 2
    assert {r["statistic"] for r in rows} == {"mic_e", "tic_e", "pearson", "dcor"}
    resolved = json.loads((tmp_path / "o" / "resolved_config.json").read_text())
    assert resolved["seed"] == 5 and resolved["total_replicates"] == 20
    svg = (tmp_path / "o" / "power.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    first = (tmp_path / "o" / "power.csv").read_bytes()
    run(capsys, "experiment", "power", "--config", cfg, "--out-dir", tmp_path / "o2", "--no-plots")
    assert (tmp_path / "o2" / "power.csv").read_bytes() == first
    assert not (tmp_path / "o2" / "power.svg").exists()


def test_experiment_config_errors(tmp_path, capsys):
    bad = _write_yaml(tmp_path / "bad.yaml", "functions: [linear]\nsigmas: [0.1]\ncolour: red\n")
    code, _, err = run(capsys, "experiment", "power", "--config", bad, "--out-dir", tmp_path / "o")
    assert code == 2 and "colour" in err
    empty = _write_yaml(tmp_path / "empty.yaml", "functions: []\nsigmas: [0.1]\n")
    assert run(capsys, "experiment", "power", "--config", empty, "--out-dir", tmp_path / "o")[0] == 2
    assert _exit_code(capsys, "experiment", "power", "--config", tmp_path / "nope.yaml",
                      "--out-dir", tmp_path / "o") == 2


def test_paper_scale_flag(tmp_path, capsys, monkeypatch):
    from micflow.harness import experiments

    seen = {}

    def fake(cfg, threads=None):
        seen["reps"] = cfg.total_replicates
        return experiments.ExperimentReport(cfg.KIND, [], [], cfg.to_dict())

    monkeypatch.setattr(experiments, "power_experiment", fake)
    monkeypatch.setattr(experiments, "bias_variance_experiment", fake)
    cfg = _write_yaml(tmp_path / "p.yaml", "functions: [linear]\nsigmas: [0.1]\n")
    run(capsys, "experiment", "power", "--config", cfg, "--out-dir", tmp_path / "o", "--paper-scale",
        "--no-plots")
    assert seen["reps"] == 1000
    run(capsys, "experiment", "bias-variance", "--config", cfg, "--out-dir", tmp_path / "o",
        "--paper-scale", "--no-plots")
    assert seen["reps"] == 500


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "micflow.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("micflow ")
