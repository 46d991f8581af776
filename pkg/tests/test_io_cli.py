import json

import numpy as np
import pytest

from gaussmag import cli
from gaussmag.averages import AverageEngine
from gaussmag.core import WavePacketState
from gaussmag.fields import ZeroMagneticField
from gaussmag.io import csv_header, emit_csv, emit_json, output_dir, read_csv, trajectory_records
from gaussmag.scenarios import run_trajectory


def _free():
    return ZeroMagneticField(
        2, lambda x: np.zeros(x.shape[:-1]), lambda x: np.zeros(x.shape), lambda x: np.zeros(x.shape + (2,)), quadratic=True
    )


def _free_state():
    return WavePacketState(0.01, 0.0, [0.5, -1.0], [0.3, 0.7], np.eye(2), 1j * np.eye(2), 0.0, 0.0)


def test_header_only(tmp_path):
    p = emit_csv([], tmp_path / "e.csv", dim=2)
    assert p.read_text().strip() == ",".join(csv_header(2))
    assert read_csv(p) == []


def test_free_particle_step_and_round_trip(tmp_path):
    s0 = _free_state()
    tau = 0.1
    tr = run_trajectory(s0, _free(), "mrk4", tau, tau)
    rows = trajectory_records(tr.states, _free(), AverageEngine())
    assert rows[1]["q1"] == pytest.approx(0.5 + tau * 0.3)
    assert rows[1]["q2"] == pytest.approx(-1.0 + tau * 0.7)
    p = emit_csv(rows, tmp_path / "t.csv")
    back = read_csv(p)
    assert list(back[0]) == csv_header(2)
    for r, b in zip(rows, back):
        assert all(r[k] == b[k] for k in r)  # bit exact


def test_csv_io_error_mentions_path(tmp_path):
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([{"t": 0.0}], target)


def test_json_and_output_dir(tmp_path, monkeypatch):
    p = emit_json({"a": np.float64(1.5), "b": [float("inf")], 3: np.int64(2)}, tmp_path / "x.json")
    assert json.loads(p.read_text()) == {"a": 1.5, "b": [None], "3": 2}
    monkeypatch.setenv("GWP_OUT_DIR", str(tmp_path / "env"))
    assert output_dir(None) == tmp_path / "env" and (tmp_path / "env").is_dir()
    assert output_dir(str(tmp_path / "cli")) == tmp_path / "cli"


def test_cli_penning_scale(capsys):
    assert cli.main(["penning-scale", "--species", "proton"]) == 0
    out = capsys.readouterr().out
    assert "1.1885e-08" in out and "76.298 MHz" in out and "672.93 kHz" in out
    assert cli.main(["penning-scale", "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert f"{info['ratio_omega']:.3g}" == "113"
    assert f"{info['ratio_B']:.3g}" == "114"


def test_cli_exit_codes(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["penning-scale", "--bogus"])
    assert exc.value.code == 1
    assert cli.main(["penning-scale", "--species", "custom", "--delta", "1e-3"]) == 1
    # potential too deep for the magnetic field: unstable trap
    assert cli.main(["penning-scale", "--phi0", "1e6"]) == 2
    assert cli.main(["converge", "--preset", "sublinear-l2", "--tau", "0.1,0.2"]) == 1
    capsys.readouterr()


def test_cli_check(capsys):
    assert cli.main(["check", "--suite", "gaussian-calculus", "--seed", "7"]) == 0
    assert "[PASS]" in capsys.readouterr().out


def test_cli_simulate_deterministic(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GWP_OUT_DIR", str(tmp_path))
    args = ["simulate", "--preset", "sublinear-convergence", "--integrator", "boris", "--eps", "0.01", "--tau", "0.05", "--t-end", "0.5", "--tau-ref", "0.005"]
    assert cli.main(args) == 0
    f = tmp_path / "sublinear-convergence_boris_eps0.01_tau0.05.csv"
    first = f.read_bytes()
    rows = read_csv(f)
    assert len(rows) == 11 and rows[-1]["t"] == pytest.approx(0.5)
    assert cli.main(args) == 0
    assert f.read_bytes() == first
    meta = json.loads((tmp_path / "sublinear-convergence_simulate_meta.json").read_text())
    assert meta["config"]["quad_order"] == 10


def test_cli_converge_summary(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps_list": [0.01], "t_end": 0.4, "tau_ref": 0.002}))
    args = ["converge", "--preset", "sublinear-convergence", "--config", str(cfg), "--tau", "0.04,0.02", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    summary = json.loads((tmp_path / "sublinear-convergence_converge_summary.json").read_text())
    assert {"preset", "eps", "tau", "integrator", "max_errors", "slopes", "runtime_s"} <= set(summary)
    assert summary["slopes"]["boris@eps=0.01"]["q"] == pytest.approx(2.0, abs=0.3)
    assert summary["config"]["t_end"] == 0.4
    assert "boris@eps=0.01" in capsys.readouterr().out


def test_cli_parallel_matches_serial(tmp_path):
    base = ["converge", "--preset", "sublinear-convergence", "--eps", "0.01", "--tau", "0.04,0.02", "--t-end", "0.2", "--tau-ref", "0.002"]
    assert cli.main(base + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(base + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a = json.loads((tmp_path / "a" / "sublinear-convergence_converge_summary.json").read_text())
    b = json.loads((tmp_path / "b" / "sublinear-convergence_converge_summary.json").read_text())
    assert a["max_errors"] == b["max_errors"] and a["slopes"] == b["slopes"]


def test_cli_energy(tmp_path):
    args = ["energy", "--preset", "sublinear-energy", "--eps", "0.01", "--tau", "0.1,0.05", "--t-end", "1.0", "--tau-ref", "0.005", "--integrator", "boris", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    s = json.loads((tmp_path / "sublinear-energy_energy_summary.json").read_text())
    assert all(r["max_norm_dev"] < 1e-12 for r in s["runs"])
