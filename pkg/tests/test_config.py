import json

import numpy as np
import pytest

from mhdlab.config import ConfigError, Preset, dump_config, load_config, parse_config
from mhdlab.solver import SubstepScheme


def test_minimal_defaults():
    spec = parse_config({"preset": "taylor_green"})
    assert spec.n == 32 and spec.box_length == pytest.approx(2 * np.pi)
    assert spec.diagnostics.serrin_s == 4.0 and spec.diagnostics.serrin_r == 6.0
    assert spec.scheme.substep_scheme is SubstepScheme.rk3_imex
    assert spec.density.kind == "constant"
    assert spec.scheme.floor_fraction == 1e-6


def test_vacuum_defaults():
    spec = parse_config({"preset": "vacuum_blob"})
    assert spec.density.kind == "blob" and spec.density.vacuum_radius > 0
    assert spec.scheme.floor_fraction == 1e-2


def test_serrin_r3_rejected():
    with pytest.raises(ConfigError, match="admissible range"):
        parse_config({"preset": "taylor_green", "diagnostics": {"serrin_r": 3}})


@pytest.mark.parametrize("bad", [
    {"preset": "taylor_green", "bogus": 1},
    {"preset": "taylor_green", "scheme": {"cfl": 0.5}},
    {"preset": "nope"},
    {"preset": "taylor_green", "n": 15},
    {"preset": "taylor_green", "constants": {"mu": 0.0}},
    {"preset": "taylor_green", "diagnostics": {"magnetic_q": 13}},
    {"n": 16},
])
def test_rejected(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_error_names_field():
    with pytest.raises(ConfigError, match="constants.mu"):
        parse_config({"preset": "taylor_green", "constants": {"mu": -1}})


@pytest.mark.parametrize("suffix", [".yaml", ".json"])
def test_round_trip(tmp_path, suffix):
    spec = parse_config({"preset": "random_bandlimited", "n": 16, "rng_seed": 2**63 + 5,
                         "amplitude": {"u": 2.5}, "scheme": {"substep_scheme": "rk2_imex"}})
    path = tmp_path / f"s{suffix}"
    dump_config(spec, path)
    again = load_config(path)
    assert again == spec
    if suffix == ".json":
        assert json.loads(path.read_text())["preset"] == "random_bandlimited"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")
    p = tmp_path / "list.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(p)


def test_scaled():
    spec = parse_config({"preset": "taylor_green", "amplitude": {"u": 2.0, "H": 1.0, "theta": 3.0}})
    s = spec.scaled(1.5)
    assert (s.amplitude.u, s.amplitude.H, s.amplitude.theta) == (3.0, 1.5, 3.0)
    assert s.preset is Preset.taylor_green
