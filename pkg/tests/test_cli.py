import csv
import json
import math
import subprocess
import sys

import pytest

from flemingviot import complete_graph as cg
from flemingviot.cli import CORRELATION_HEADER, main
from flemingviot.two_point import GAP_CURVE_HEADER


def _ini(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


CG100 = "[experiment]\nmodel = complete-graph\nhorizon = 50\n[model]\nK = 3\np = 1\nN = 100\n"
SMALL_TP = """\
[experiment]
model = two-point
replicas = 300
horizon = 1.0
n_grid = 2 3 4
t_grid = 0 0.5 1
eta0 = 3 3
[model]
a = 1
b = 2
p01 = 0.5
p02 = 1
N = 6
"""


def test_simulate_complete_graph_approaches_uniform(tmp_path):
    out = tmp_path / "run" / "traj.csv"
    assert main(["simulate", "--config", _ini(tmp_path, CG100), "--out", str(out)]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert sum(summary["final"]) == 100
    assert summary["events"] == sum(summary["event_counts"].values())
    sd = math.sqrt(cg.stationary_covariance(cg.CompleteGraphParams(3, 1.0, 100)).var) / 100
    for x in summary["empirical_measure"]:
        assert abs(x - 1 / 3) <= 3 * sd
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "site_from", "site_to", "cause"]
    assert len(rows) - 1 == summary["events"]
    times = [float(r[0]) for r in rows[1:]]
    assert times == sorted(times) and times[-1] <= 50


def test_simulate_is_reproducible(tmp_path):
    cfg = _ini(tmp_path, CG100)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", cfg, "--seed", "7", "--out", str(a)])
    main(["simulate", "--config", cfg, "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()
    main(["simulate", "--config", cfg, "--seed", "8", "--out", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_simulate_to_stdout(tmp_path, capsys):
    assert main(["simulate", "--config", _ini(tmp_path, SMALL_TP), "--timing"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("time,site_from,site_to,cause")
    assert "wall_time_s" in json.loads(captured.err)


def test_gap_curve(tmp_path):
    out = tmp_path / "gap.csv"
    assert main(["gap-curve", "--config", _ini(tmp_path, SMALL_TP), "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == GAP_CURVE_HEADER
    assert [int(r[0]) for r in rows[1:]] == [2, 3, 4]
    for r in rows[1:]:
        lam_n, hardy, best = float(r[3]), float(r[4]), float(r[5])
        assert hardy <= lam_n and best <= lam_n * (1 + 1e-9)


def test_gap_curve_rejects_complete_graph(tmp_path, capsys):
    assert main(["gap-curve", "--preset", "complete-graph"]) == 2
    assert "two-point" in capsys.readouterr().err


def test_correlations_reproducible_across_workers(tmp_path):
    cfg = _ini(tmp_path, SMALL_TP)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["correlations", "--config", cfg, "--seed", "5", "--out", str(a)]) == 0
    assert main(["correlations", "--config", cfg, "--seed", "5", "--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(a.open()))
    assert tuple(rows[0]) == CORRELATION_HEADER
    for t, analytic, mc, err, bound in rows[1:]:
        assert abs(float(analytic)) <= float(bound) + 1e-12
        assert abs(float(mc) - float(analytic)) <= 5 * float(err) + 1e-12


def test_invariant_and_spectrum(tmp_path):
    for preset in ("complete-graph", "regime-i"):
        out = tmp_path / f"{preset}-inv.json"
        assert main(["invariant", "--preset", preset, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["max_abs_diff"] < 1e-9
        assert abs(sum(report["closed_form"]) - 1) < 1e-12
    out = tmp_path / "spec.json"
    cfg = _ini(tmp_path, SMALL_TP)
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["dense_max_abs_diff"] < 1e-9
    assert main(["spectrum", "--preset", "complete-graph", "--out", str(out)]) == 0


def test_usage_errors(tmp_path, capsys):
    assert main(["invariant"]) == 2
    assert main(["invariant", "--preset", "regime-i", "--config", "x.ini"]) == 2
    assert main(["invariant", "--preset", "nosuch"]) == 2
    bad = _ini(tmp_path, SMALL_TP.replace("N = 6", "N = six"), "bad.ini")
    assert main(["simulate", "--config", bad]) == 2
    assert "bad.ini:13:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--seed", "-3", "--preset", "regime-i"])
    assert info.value.code == 2


def test_verify_subset(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "--scope", "two-point", "--quiet", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"]
    assert {c["id"] for c in report["results"]} >= {"tp-eigensystem", "tp-hardy"}


def test_verify_failure_exit_code(monkeypatch, tmp_path):
    import flemingviot.cli as cli

    monkeypatch.setattr(cli, "run_verification", lambda *a, **k: {"passed": False, "results": []})
    assert main(["verify", "--quiet", "--out", str(tmp_path / "v.json")]) == 1


def test_module_entry_point():
    result = subprocess.run([sys.executable, "-m", "flemingviot", "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    for command in ("simulate", "gap-curve", "correlations", "invariant", "spectrum", "verify"):
        assert command in result.stdout
