import json

import numpy as np
import pytest

from cantilever_atoms import config as cfgmod
from cantilever_atoms.config import ConfigError, load_config, parse_config
from cantilever_atoms.io import format_csv, read_csv, write_csv


def doc(**kw):
    d = {"schema_version": 1}
    d.update(kw)
    return d


def test_defaults_filled():
    cfg = parse_config(doc())
    assert cfg.seed == 42 and cfg.atom_count == 10000
    assert cfg.temperature == pytest.approx(100e-6)
    assert cfg.dt == pytest.approx(1e-7)
    assert cfg.data["dynamics"]["loss_mode"] == "immediate"


@pytest.mark.parametrize("bad,field", [
    (dict(dt_us=0), "dt_us"),
    (dict(atom_count=0), "atom_count"),
    (dict(bogus=1), "bogus"),
    (dict(trap={"standoff_um": 100, "typo": 1}), "trap.typo"),
    (dict(dynamics={"loss_mode": "sometimes"}), "dynamics.loss_mode"),
    (dict(schema_version=2), "schema_version"),
    (dict(duration_ms=1e-5, dt_us=0.1), "duration_ms"),
    (dict(trap={"quad_gradient_T_per_m": 5.0, "trap_frequency_Hz": 1000.0}), None),
    (dict(detection={"z_min_um": 2.0, "z_max_um": 1.0}), "detection.z_max_um"),
])
def test_validation_errors_name_the_field(bad, field):
    with pytest.raises(ConfigError) as info:
        parse_config(doc(**bad))
    if field is not None:
        assert info.value.field == field


def test_missing_schema_version():
    with pytest.raises(ConfigError) as info:
        parse_config({})
    assert info.value.field == "schema_version"


def test_alternative_keys_clear_defaults():
    cfg = parse_config(doc(trap={"quad_gradient_T_per_m": 5.0}))
    assert cfg.data["trap"]["trap_frequency_Hz"] is None
    assert cfgmod.quad_gradient(cfg) == 5.0
    cfg = parse_config(doc(magnet={"magnetization_A_per_m": 4e4}))
    assert cfg.data["magnet"]["moment_J_per_T"] is None
    assert cfgmod.build_magnet(cfg).magnetization == 4e4


def test_hash_stable_and_sensitive():
    a = parse_config(doc(seed=1))
    assert a == parse_config(doc(seed=1))
    assert a.config_hash != parse_config(doc(seed=2)).config_hash
    # execution-only keys do not change the hash
    assert a.config_hash == parse_config(doc(seed=1, threads=3, output_path="x.csv")).config_hash
    # explicit defaults hash like omitted ones
    assert a.config_hash == parse_config(doc(seed=1, atom_count=10000)).config_hash


def test_round_trip(tmp_path):
    cfg = load_config("paper_fig3.json")
    p = tmp_path / "c.json"
    p.write_text(cfgmod.dump_config(cfg))
    again = load_config(str(p))
    assert again == cfg and again.data == cfg.data


def test_overrides():
    cfg = parse_config(doc())
    new = cfg.with_overrides(**{"drive.V_ac_V": 8.0, "seed": 7})
    assert new.data["drive"]["V_ac_V"] == 8.0 and new.seed == 7
    assert cfg.data["drive"]["V_ac_V"] == 10.0
    with pytest.raises(ConfigError):
        cfg.with_overrides(dt_us=-1.0)


def test_parse_error_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema_version": 1,\n  "seed": ,\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(str(p))


def test_config_dir_env(tmp_path, monkeypatch):
    (tmp_path / "mine.json").write_text(json.dumps(doc(seed=9)))
    monkeypatch.setenv(cfgmod.CONFIG_DIR_ENV, str(tmp_path))
    assert load_config("mine.json").seed == 9
    with pytest.raises(ConfigError, match="not found"):
        load_config("absent.json")


def test_bundled_configs_valid():
    names = cfgmod.bundled_configs()
    for n in ("paper_fig1.json", "paper_fig2.json", "paper_fig3.json", "paper_fig4.json"):
        assert n in names
    for n in names:
        load_config(n)


def test_builders():
    cfg = load_config("paper_fig1.json")
    c = cfgmod.build_cantilever(cfg)
    assert c.beam.length == pytest.approx(130e-6)
    assert c.tip_magnet.total_moment == pytest.approx(2e-9)
    assert c.tip_magnet.half_lengths[2] == pytest.approx(42.5e-6)
    drv = cfgmod.build_drive(cfg, V_ac=8.0)
    assert drv.V_ac == 8.0 and drv.gap == pytest.approx(9e-6)
    room, cryo = cfgmod.detection_scenarios(load_config("paper_fig4.json"))
    assert room.temperature == 300 and cryo.bandwidth == 0.1 and cryo.spin_count == 1000
    assert len(room.separations) == 241
    assert cfgmod.build_constants(cfg).gamma_Rb == 7e9


def test_csv_round_trip(tmp_path):
    rows = np.array([[0.1, 1 / 3, 2.0], [1e-17, np.pi, 5.0]])
    p = tmp_path / "o.csv"
    text = write_csv(p, ["a", "b", "c"], rows, {"z": [1, 2], "config_hash": "abc"})
    meta, header, data = read_csv(p)
    assert header == ["a", "b", "c"]
    assert np.array_equal(data, rows)
    assert meta == {"z": [1, 2], "config_hash": "abc"}
    assert text == format_csv(["a", "b", "c"], rows, {"config_hash": "abc", "z": [1, 2]})
    assert text.index("config_hash") < text.index("# z")


def test_csv_without_header(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("# only: 1\n")
    with pytest.raises(ValueError):
        read_csv(p)
