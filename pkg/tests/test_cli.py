import json
import subprocess
import sys
from pathlib import Path

import pytest

from cgmd.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

SMALL_REFLECT = {"version": 1, "model": {"n_atoms": 256}, "basis": {"atomistic_start": 128},
                 "initial": {"center": 180, "width": 10},
                 "integrator": {"t_final": 20, "record_every": 50},
                 "report": {"snapshots": [0, 10, 20]},
                 "reduction": {"kind": "extended", "krylov_depth": 4, "n_coarse_enriched": 8}}

SMALL_SIM = {"version": 1, "model": {"potential": "harmonic", "n_atoms": 64},
             "basis": {"coarse_mesh_size": 4, "atomistic_start": 32},
             "reduction": {"kind": "conventional", "linear": True},
             "initial": {"kind": "gaussian", "center": 44, "width": 6, "amplitude": 0.01},
             "integrator": {"dt": 0.01, "t_final": 5, "record_every": 100}}

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_simulate(tmp_path):
    cfg = _write(tmp_path, "sim.json", SMALL_SIM)
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    for name in ("config.resolved.json", "trajectory.csv", "diagnostics.csv", "summary.json",
                 "snapshots.png", "energy.png"):
        assert (out / name).exists(), name
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,atom,displacement,velocity"
    assert len(lines) == 1 + 6 * 62
    summary = json.loads((out / "summary.json").read_text())
    assert summary["relative_energy_drift"] < 1e-6
    assert json.loads((out / "config.resolved.json").read_text())["model"]["n_atoms"] == 64


def test_reflect_outputs_and_determinism(tmp_path):
    cfg = _write(tmp_path, "r.json", SMALL_REFLECT)
    for d in ("a", "b"):
        assert main(["reflect", "--config", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    for name in ("report.json", "energy.csv", "snapshots.csv", "config.resolved.json",
                 "energy.png", "snapshots.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["kind"] == "extended" and not report["unstable"]
    assert 0 <= report["reflection_fraction"] <= 1
    assert (tmp_path / "a" / "energy.csv").read_text().startswith("#")
    times = {line.split(",")[0] for line in
             (tmp_path / "a" / "snapshots.csv").read_text().splitlines()[1:]}
    assert len(times) == 3


def test_kernel_and_stability(tmp_path):
    kc = _write(tmp_path, "k.json", {"version": 1, "model": {"n_atoms": 128},
                                     "basis": {"atomistic_start": 64},
                                     "kernel": {"t_max": 5.0, "nodes_before": 2, "nodes_after": 3}})
    assert main(["kernel", "--config", str(kc), "--out", str(tmp_path / "k"), "--no-figures"]) == 0
    peaks = json.loads((tmp_path / "k" / "kernel_peaks.json").read_text())
    assert len(peaks["nodes"]) == 6
    assert not (tmp_path / "k" / "kernel.png").exists()
    assert main(["stability", "--config", str(CONFIGS / "stability_5atom.json"),
                 "--out", str(tmp_path / "s")]) == 0
    st = json.loads((tmp_path / "s" / "stability.json").read_text())
    assert st["direct"]["stable"] is False and st["extended"]["stable"] is True
    assert (tmp_path / "s" / "eigenvalues.png").exists()


def test_sweep(tmp_path):
    _write(tmp_path, "sim.json", SMALL_SIM)
    sweep = _write(tmp_path, "sweep.json", {"version": 1, "workers": 2, "runs": [
        {"name": "one", "command": "simulate", "config_path": "sim.json"},
        {"name": "two", "command": "stability",
         "config": {"version": 1, "model": {"potential": "harmonic", "n_atoms": 5},
                    "basis": {"kind": "nodes", "nodes": [0, 2, 4], "atomistic_start": 4}}},
    ]})
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(sweep), "--out", str(out), "--no-figures"]) == 0
    assert json.loads((out / "sweep.json").read_text()) == {"one": 0, "two": 0}
    assert (out / "one" / "summary.json").exists()
    assert (out / "two" / "stability.json").exists()
    serial = tmp_path / "serial"
    assert main(["sweep", "--config", str(sweep), "--out", str(serial), "--no-figures",
                 "--workers", "1"]) == 0
    assert ((out / "one" / "trajectory.csv").read_bytes()
            == (serial / "one" / "trajectory.csv").read_bytes())


@pytest.mark.parametrize("doc", [
    {"version": 1, "colour": "red"},
    {"version": 1, "basis": {"coarse_mesh_size": 7}},
])
def test_config_errors_exit_2(tmp_path, doc, capsys):
    cfg = _write(tmp_path, "bad.json", doc)
    assert main(["reflect", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_bad_sweep_exit_2(tmp_path):
    sweep = _write(tmp_path, "sweep.json", {"version": 1, "runs": [{"command": "dance",
                                                                     "config": {"version": 1}}]})
    assert main(["sweep", "--config", str(sweep), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_numerical_failures_exit_3(tmp_path):
    ident = _write(tmp_path, "i.json", {"version": 1, "model": {"potential": "harmonic", "n_atoms": 8},
                                        "basis": {"kind": "identity"}})
    assert main(["stability", "--config", str(ident), "--out", str(tmp_path / "i")]) == EXIT_NUMERICAL
    v0 = [0.0] * 16
    v0[5], v0[6] = 10.0, -10.0
    blow = _write(tmp_path, "b.json", {
        "version": 1, "model": {"n_atoms": 16}, "basis": {"kind": "identity"},
        "reduction": {"kind": "full"}, "report": {"split_atom": 8, "snapshots": []},
        "initial": {"kind": "explicit", "u0": [0.0] * 16, "v0": v0},
        "integrator": {"t_final": 5.0, "record_every": 1}})
    assert main(["reflect", "--config", str(blow), "--out", str(tmp_path / "b"),
                 "--no-figures"]) == EXIT_NUMERICAL
    assert json.loads((tmp_path / "b" / "report.json").read_text())["unstable"] is True


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cgmd.cli", "stability", "--config",
                        str(CONFIGS / "stability_5atom.json"), "--out", str(tmp_path / "s"),
                        "--no-figures"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "cgmd.cli", "frobnicate"], capture_output=True)
    assert r.returncode == 2
