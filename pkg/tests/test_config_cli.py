import csv
import io
import json

import pytest

from qfriction import cli
from qfriction.config import (ConfigError, config_hash, dump_config, merge, parse_config,
                              preset, RunConfig)

VACUUM_CP = """
task: cp
atom: {kind: oscillator, omega_a_rad_s: 1.0e15, alpha0_C_m2_per_V: 2.0e-38}
surface: {kind: vacuum}
geometry: {z_m: [1.0e-9, 2.0e-9]}
"""


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema: ")
    return list(csv.DictReader(lines[1:]))


def test_preset_values():
    rb = preset("rb-si-nearfield")
    s = rb.section("surface")
    assert s["rho_ohm_m"] == 640.0
    assert rb.section("atom")["alpha0_C_m2_per_V"] == 5.26e-39
    assert rb.z_list == [1e-8] and rb.v_list == [340.0]
    assert preset("drude-toy").section("surface")["gamma_d_rad_s"] > 0
    with pytest.raises(ConfigError):
        preset("nope")


@pytest.mark.parametrize("name", ["ohmic-toy", "rb-si-nearfield", "drude-toy"])
def test_preset_round_trip(name):
    cfg = preset(name)
    again = parse_config(dump_config(cfg))
    assert again.data == cfg.data
    assert config_hash(again) == config_hash(cfg)


def test_unknown_key_reports_location():
    with pytest.raises(ConfigError) as err:
        parse_config(VACUUM_CP + "motion: {v_m_s: [1.0], speed: 3}\n")
    assert "speed" in str(err.value) and "line" in str(err.value)


@pytest.mark.parametrize("text", [
    "task: cp\natom: {kind: oscillator, omega_a_rad_s: 1.0e15}\nsurface: {kind: vacuum}\ngeometry: {z_m: [1.0e-9]}\n",
    VACUUM_CP.replace("vacuum", "ohmic"),
    VACUUM_CP.replace("[1.0e-9, 2.0e-9]", "[]"),
    VACUUM_CP.replace("1.0e15", "fast"),
    "task: cp\natom: [1, 2\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_merge_overlays_sections():
    base = preset("ohmic-toy")
    over = parse_config("geometry: {z_m: [2.0e-9]}\n", partial=True)
    m = merge(base, over)
    assert m.z_list == [2e-9]
    assert m.section("atom") == base.section("atom")


def test_cli_headline(capsys):
    code, out, err = run_cli(["friction", "--preset", "rb-si-nearfield"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["value_N"]) == pytest.approx(-1.3e-20, rel=0.05)
    assert rows[0]["converged"] == "true"
    assert rows[0]["config_hash"] == config_hash(preset("rb-si-nearfield"))
    assert len(err.strip().splitlines()) == 1


def test_cli_vacuum_cp_and_jsonl(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(VACUUM_CP)
    out = tmp_path / "o.jsonl"
    code, _, err = run_cli(["cp", "--config", str(cfg), "--format", "jsonl", "--out", str(out)], capsys)
    assert code == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["value_N"] for r in recs] == [0.0, 0.0]
    assert len(err.strip().splitlines()) == 2


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(VACUUM_CP + "colour: red\n")
    assert run_cli(["cp", "--config", str(bad)], capsys)[0] == 2
    assert run_cli(["cp"], capsys)[0] == 2
    assert run_cli(["cp", "--config", str(tmp_path / "missing.yaml")], capsys)[0] == 2
    # near-field closed form on a Drude surface is a domain error
    over = tmp_path / "o.yaml"
    over.write_text("friction: {method: nearfield}\n")
    assert run_cli(["friction", "--preset", "drude-toy", "--config", str(over)], capsys)[0] == 4
    # far too few bath modes for a plateau
    osc = tmp_path / "osc.yaml"
    osc.write_text("oracle: {mode: moving, modes: 16, samples: 20}\n")
    code, _, _ = run_cli(["oracle", "--preset", "ohmic-toy", "--config", str(osc)], capsys)
    assert code == 3
    code, _, _ = run_cli(["oracle", "--preset", "ohmic-toy", "--config", str(osc),
                          "--allow-nonconverged"], capsys)
    assert code == 0


def test_cli_compare_qrt_monotone(capsys):
    code, out, _ = run_cli(["compare-qrt", "--preset", "ohmic-toy"], capsys)
    assert code == 0
    rows = read_csv(out)
    dev = [abs(float(r["rel_deviation_bare"])) for r in rows]
    assert len(dev) == 3 and dev[0] < dev[1] < dev[2]


def test_cli_deterministic_across_threads(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("motion: {v_m_s: [100.0, 200.0, 400.0, 800.0]}\nfriction: {method: lowv}\n")
    args = ["friction", "--preset", "ohmic-toy", "--config", str(cfg)]
    a = run_cli(args + ["--threads", "1"], capsys)[1]
    b = run_cli(args + ["--threads", "3"], capsys)[1]
    assert a == b
    vals = [float(r["v_m_s"]) for r in read_csv(a)]
    assert vals == [100.0, 200.0, 400.0, 800.0]


def test_units_in_numeric_headers(capsys):
    _, out, _ = run_cli(["friction", "--preset", "rb-si-nearfield"], capsys)
    header = out.splitlines()[1].split(",")
    for col in ("z_m", "v_m_s", "value_N", "abs_error_N"):
        assert col in header
