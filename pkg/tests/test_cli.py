import json
from pathlib import Path

import numpy as np
import pytest

from sipfw.cli import main
from sipfw.config import template
from sipfw.io import read_field_binary


def write_tiny_config(path, **edits):
    text = template("benchmark2d")
    replacements = {
        "h_modes = 64": "h_modes = 32",
        "h0_cutoff = 64": "h0_cutoff = 32",
        "t_final = 1.0": "t_final = 0.02",
        "n_particles = 65536": "n_particles = 4096",
        "snapshot_every = 0": "snapshot_every = 5",
    }
    replacements.update(edits)
    for old, new in replacements.items():
        assert old in text, old
        text = text.replace(old, new)
    Path(path).write_text(text)
    return path


def test_init_config_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    assert main(["init-config", "--kind", "benchmark2d", "--out", str(cfg)]) == 0
    assert cfg.exists()


def test_run_tiny_benchmark(tmp_path):
    cfg = write_tiny_config(tmp_path / "run.cfg")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    # snapshots at steps 0, 5, 10, 15, 20 and four fields each
    fields = sorted(p.name for p in out.glob("*.field"))
    assert len(fields) == 5 * 4
    assert "step000000_u.field" in fields and "step000020_w.field" in fields
    # v/m/w at 32^2 nodes get CSV sidecars, the 128^2 plot grid does not
    assert len(list(out.glob("*_v.csv"))) == 5
    assert not list(out.glob("*_u.csv"))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["steps"] == 20
    assert (out / "resolved.cfg").exists()
    u_final = read_field_binary(out / "step000020_u.field")
    assert u_final["values"].min() >= 0.0
    assert u_final["time"] == pytest.approx(0.02)


def test_run_missing_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    text = template("benchmark2d").replace("gamma = 5.0\n", "")
    cfg.write_text(text)
    assert main(["run", "--config", str(cfg)]) == 2
    assert "model.gamma" in capsys.readouterr().err


def test_run_rejects_large_timestep(tmp_path, capsys):
    cfg = write_tiny_config(tmp_path / "dt.cfg", **{"dt = 0.001": "dt = 0.6"})
    assert main(["run", "--config", str(cfg)]) == 2
    assert "dt" in capsys.readouterr().err


def test_manifest_round_trip_bitwise(tmp_path):
    cfg = write_tiny_config(tmp_path / "rt.cfg")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    # rerun from the resolved config the manifest points at
    assert main(["run", "--config", str(out1 / "resolved.cfg"), "--out", str(out2)]) == 0
    for field_file in sorted(out1.glob("*.field")):
        assert (out2 / field_file.name).read_bytes() == field_file.read_bytes()


def test_run_thread_override_identical(tmp_path):
    cfg = write_tiny_config(tmp_path / "thr.cfg")
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    assert main(["run", "--config", str(cfg), "--out", str(out1), "--threads", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out4), "--threads", "4"]) == 0
    for field_file in sorted(out1.glob("*.field")):
        assert (out4 / field_file.name).read_bytes() == field_file.read_bytes()


def test_convergence_synthetic_table(tmp_path, capsys):
    table = tmp_path / "t.csv"
    rows = ["H,P,tau,T,E,seed"]
    for h in (32, 64, 128, 256):
        rows.append(f"{h},1024,0.001,1.0,{0.9 * h ** -2.0},1")
    table.write_text("\n".join(rows) + "\n")
    assert main(["convergence", "--table", str(table)]) == 0
    out = capsys.readouterr().out
    assert "slope = -2.0000" in out


def test_convergence_needs_three_resolutions(tmp_path, capsys):
    cfg = write_tiny_config(tmp_path / "c.cfg")
    assert main(["convergence", "--config", str(cfg), "--resolutions", "16,32"]) == 2
    assert "3 resolutions" in capsys.readouterr().err


def test_convergence_tiny_run(tmp_path, capsys):
    cfg = write_tiny_config(tmp_path / "c2.cfg", **{"t_final = 1.0": "t_final = 0.01"})
    out = tmp_path / "conv"
    assert main(["convergence", "--config", str(cfg), "--resolutions", "8,16,32,64",
                 "--target", "8", "--out", str(out)]) == 0
    text = (out / "convergence.csv").read_text()
    assert text.splitlines()[0] == "H,P,tau,T,E,seed"
    assert len(text.splitlines()) == 4  # header + three error rows vs the H=64 reference
    manifest = json.loads((out / "manifest.json").read_text())
    assert "slope" in manifest


def test_compare_zero_dynamics(tmp_path, capsys):
    # frozen transport: constant w = 1 makes growth cancel, a uniform v has
    # no gradient; the particle/mesh gap is set by the sampling floor
    text = template("custom")
    for old, new in {
        "chi = 0.4": "chi = 1e-12",
        "d_u = 0.01": "d_u = 1e-12",
        "d_m = 0.01": "d_m = 1e-12",
        "d_w = 0.01": "d_w = 1e-12",
        "n_particles = 65536": "n_particles = 65536",
        "h_modes = 64": "h_modes = 32",
        "h0_cutoff = 64": "h0_cutoff = 32",
        "t_final = 1.0": "t_final = 0.02",
        "u0 = max(0.3 - (x1 - 3.0)*(x1 - 3.0) - (x2 - 3.0)*(x2 - 3.0), 0.0)": "u0 = 0.5",
        "u0_bound = 0.3": "u0_bound = 0.5",
        "w0 = 1.2": "w0 = 1.0",
    }.items():
        assert old in text, old
        text = text.replace(old, new)
    cfg = tmp_path / "zero.cfg"
    cfg.write_text(text)
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg), "--ref-n", "64", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    line = next(l for l in printed.splitlines() if "E(particle vs mesh)" in l)
    err_value = float(line.split("=")[-1])
    # nothing moves, so the gap is pure sampling noise ~ P^{-1/2}
    assert err_value < 25.0 / np.sqrt(65536)
    assert (out / "compare.csv").exists()


def test_compare_rejects_3d(tmp_path, capsys):
    cfg = tmp_path / "c3.cfg"
    cfg.write_text(template("benchmark3d"))
    assert main(["compare", "--config", str(cfg)]) == 2
    assert "2D" in capsys.readouterr().err


def test_resample_demo(capsys):
    assert main(["resample-demo", "--trials", "2000", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "expected (1.5, 0.5)" in out


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg = write_tiny_config(tmp_path / "env.cfg", **{"t_final = 0.02": "t_final = 0.005"})
    monkeypatch.setenv("SIPFW_THREADS", "2")
    out = tmp_path / "envout"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["steps"] == 5
