import argparse
import json
import subprocess
import sys

import pytest

from delayfhn.cli import parse_k_range, parse_pair, parse_range, run


def test_parse_range():
    assert parse_range("0.3:0.5:0.1") == [0.3, 0.4, 0.5]
    assert parse_range("1") == [1.0]
    for bad in ("1:0:0.1", "0:1:0", "a:b:c", "0:1"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_range(bad)
    assert parse_k_range("0..3") == [0, 1, 2, 3] and parse_k_range("2") == [2]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_k_range("3..1")
    assert parse_pair("1,-2") == (1.0, -2.0)


def test_simulate_is_byte_reproducible(tmp_path):
    args = ["simulate", "--tau", "0.55", "--T", "30", "--T-discard", "10"]
    assert run(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert run(args + ["--out-dir", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a" / "trajectory.csv", tmp_path / "b" / "trajectory.csv"
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a" / "trajectory.csv.json").read_text())
    assert meta["command"] == "simulate" and meta["settings"]["tau"] == 0.55
    assert "version" in meta
    assert (tmp_path / "a" / "plot_trajectory.py").exists()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntau = 0.7\neps=0.02\n")
    assert run(["simulate", "--config", str(cfg), "--tau", "0.9", "--print-defaults"]) == 0
    out = dict(l.split("=", 1) for l in capsys.readouterr().out.splitlines())
    assert out["tau"] == "0.9" and out["eps"] == "0.02"


def test_unknown_config_key_is_invalid(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("taus = 0.7\n")
    assert run(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize("argv", [
    ["simulate", "--tau", "-1"],
    ["simulate", "--history", "1"],
    ["atlas", "--tau", "1:0:0.1"],
    ["lyapunov"],
    ["hopf-curves", "--k", "2..1"],
    ["nonexistent"],
])
def test_invalid_input_exit_code(argv, tmp_path):
    assert run(argv + ["--out-dir", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path):
    # an oversized step makes the explicit scheme blow up
    argv = ["simulate", "--fast-y", "0", "--tau", "4", "--h-max", "1", "--history", "50,0",
            "--T", "50", "--T-discard", "0", "--out-dir", str(tmp_path)]
    assert run(argv) == 3


def test_bautin_command(tmp_path, capsys):
    assert run(["bautin", "--out-dir", str(tmp_path)]) == 0
    assert "tau_bautin = 3.36" in capsys.readouterr().out


def test_stability_and_lyapunov(tmp_path, capsys):
    assert run(["stability", "--tau", "0.3", "--out-dir", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "stable"
    assert run(["stability", "--tau", "0.4", "--out-dir", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "unstable"
    assert run(["lyapunov", "--y", "-1.0", "--out-dir", str(tmp_path)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["criticality"] == "subcritical" and res["omega"] == pytest.approx(1.40234, abs=1e-5)


def test_curve_and_atlas_outputs(tmp_path, capsys):
    assert run(["hopf-curves", "--k", "0..1", "--n", "8", "--out-dir", str(tmp_path)]) == 0
    assert run(["fast-diagram", "--n", "8", "--out-dir", str(tmp_path)]) == 0
    assert run(["atlas", "--tau", "0.3:0.4:0.1", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "atlas.csv").read_text().splitlines()
    assert len(lines) == 3 and "Stationary" in lines[1] and "SmallCycle" in lines[2]
    assert run(["average-manifold", "--y=-1:1:0.25", "--predict-a", "0",
                "--out-dir", str(tmp_path)]) == 0
    assert "FastSpiking" in capsys.readouterr().out


def test_portrait_poincare_network(tmp_path):
    assert run(["portrait", "--tau", "1", "--saddle", "--T", "30",
                "--out-dir", str(tmp_path)]) == 0
    assert run(["poincare", "--tau", "0.55", "--out-dir", str(tmp_path)]) == 0
    assert run(["network", "--N", "3", "--T", "5", "--sigma", "0.1",
                "--out-dir", str(tmp_path)]) == 0
    assert len(list((tmp_path / "network").glob("unit_*.csv"))) == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "delayfhn", "reproduce", "5",
                        "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.count("PASS") == 3
