import numpy as np
import pytest

from sipfw.config import ConfigError, parse_config_text, render_config, template
from sipfw.io import read_field_binary, write_csv, write_field_binary, write_field_csv


# ------------------------------------------------------------------ config

def test_template_parses(tmp_path):
    for kind in ("benchmark2d", "benchmark3d", "custom"):
        config, spec = parse_config_text(template(kind))
        assert spec.kind == kind
        assert config.domain.dim == (3 if kind == "benchmark3d" else 2)


def test_missing_key_names_it():
    text = template("benchmark2d").replace("beta = 0.01\n", "")
    with pytest.raises(ConfigError, match="model.beta"):
        parse_config_text(text)


def test_unknown_key_rejected():
    text = template("benchmark2d") + "\nwobble = 3\n"
    with pytest.raises(ConfigError, match="wobble"):
        parse_config_text(text)


def test_unknown_section_rejected():
    text = template("benchmark2d") + "\n[extras]\nfoo = 1\n"
    with pytest.raises(ConfigError, match="extras"):
        parse_config_text(text)


def test_timestep_cap_enforced():
    text = template("benchmark2d").replace("dt = 0.001", "dt = 0.6")
    with pytest.raises(ConfigError, match="dt"):
        parse_config_text(text)


def test_bad_enum_value():
    text = template("benchmark2d").replace("filter = sharp", "filter = fancy")
    with pytest.raises(ConfigError, match="filter"):
        parse_config_text(text)


def test_dim_mismatch_with_benchmark():
    text = template("benchmark2d").replace("dim = 2", "dim = 3").replace(
        "origin = 0.0 0.0", "origin = 0.0 0.0 0.0"
    )
    with pytest.raises(ConfigError, match="benchmark2d"):
        parse_config_text(text)


def test_custom_requires_expressions():
    text = template("custom").replace("u0_bound = 0.3\n", "")
    with pytest.raises(ConfigError, match="u0_bound"):
        parse_config_text(text)


def test_render_round_trip():
    config, spec = parse_config_text(template("custom"))
    text = render_config(config, spec)
    config2, spec2 = parse_config_text(text)
    assert config2 == config
    assert spec2 == spec


def test_h0_defaults_to_h():
    config, _ = parse_config_text(template("benchmark2d").replace("h0_cutoff = 64\n", ""))
    assert config.disc.h0_cutoff == config.disc.h_modes


# ---------------------------------------------------------------------- io

def test_field_binary_round_trip(tmp_path, rng):
    values = rng.random((5, 7))
    path = tmp_path / "f.field"
    write_field_binary(path, "u", values, 6.0, 1.25)
    back = read_field_binary(path)
    assert back["name"] == "u"
    assert back["length"] == 6.0 and back["time"] == 1.25
    assert np.array_equal(back["values"], values)


def test_field_binary_layout_x_fastest(tmp_path):
    # header: 7 magic + 1 dim + 8 dims + 16 L/t + 1 namelen + 1 name = 34 bytes
    values = np.array([[0.0, 1.0, 2.0], [10.0, 11.0, 12.0]])  # shape (2, 3): x has 2 nodes
    path = tmp_path / "g.field"
    write_field_binary(path, "g", values, 1.0, 0.0)
    raw = path.read_bytes()
    assert raw[:7] == b"SIPFW1\x00"
    data = np.frombuffer(raw[34:], dtype="<f8")
    # x1 varies fastest: (0,0), (1,0), (0,1), (1,1), (0,2), (1,2)
    assert data.tolist() == [0.0, 10.0, 1.0, 11.0, 2.0, 12.0]


def test_field_binary_3d_round_trip(tmp_path, rng):
    values = rng.random((3, 4, 5))
    path = tmp_path / "h.field"
    write_field_binary(path, "w", values, 2.0, 0.5)
    assert np.array_equal(read_field_binary(path)["values"], values)


def test_csv_format(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["H", "E"], [[32, 0.5], [64, 0.125]])
    text = path.read_bytes().decode()
    assert text == "H,E\n32,0.5\n64,0.125\n"
    assert "\r" not in text


def test_field_csv(tmp_path):
    path = tmp_path / "f.csv"
    write_field_csv(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
    lines = path.read_text().splitlines()
    assert lines[0] == "i1,i2,value"
    assert lines[1] == "0,0,1.0"
    assert len(lines) == 5
