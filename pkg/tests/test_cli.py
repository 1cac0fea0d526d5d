import csv
import io
import json
import os
from pathlib import Path

import pytest

from mcvqkd.cli import CONFIG_SCHEMA, format_number, main

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("MCVQKD_REGEN_GOLDENS") == "1"

GOLDEN_COMMANDS = {
    "keyrate_vacuum.csv": ["keyrate", "--tbar", "0.9", "--eve-variance", "1"],
    "keyrate_sweep.json": ["keyrate", "--config", str(GOLDEN / "sweep.json"), "--eve-variance", "1.2"],
    "threshold_rr_single.csv": ["threshold", "--variant", "rr_one_way_single"],
    "threshold_rr_hom_wmax.csv": ["threshold", "--sweep", "t_bar:0.6:0.99:40", "--quantity", "eve_variance"],
    "threshold_all.csv": ["threshold", "--sweep", "t_bar:0.7:0.95:3", "--all"],
    "region.csv": ["region", "--config", str(GOLDEN / "region.json")],
    "region_svd.csv": ["region", "--config", str(GOLDEN / "region.json"), "--svd-v", "1.05,1.0,1.0"],
}


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("name", sorted(GOLDEN_COMMANDS))
def test_goldens_are_byte_identical(name, capsys):
    code, out, _ = run(GOLDEN_COMMANDS[name], capsys)
    assert code == 0
    path = GOLDEN / name
    if REGEN:
        path.write_bytes(out.encode())
    assert out.encode() == path.read_bytes()
    assert "\r" not in out


def test_keyrate_vacuum_row(capsys):
    code, out, err = run(["keyrate", "--tbar", "0.9", "--eve-variance", "1"], capsys)
    assert code == 0 and err == ""
    (row,) = rows(out)
    assert list(row) == ["T_bar", "W_bar", "rate_bits", "rate_clamped", "info_term", "eve_term"]
    assert float(row["rate_bits"]) == pytest.approx(1.66096, abs=1e-5)


def test_regime_exit_code(capsys):
    code, out, err = run(["keyrate", "--tbar", "0.9", "--mod-variance", "2"], capsys)
    assert code == 3 and out == ""
    assert "regime" in err


def test_marginal_regime_warns_on_stderr_only(capsys):
    code, out, err = run(["keyrate", "--tbar", "0.9", "--mod-variance", "50"], capsys)
    assert code == 0 and "warning" in err and "warning" not in out


def test_malformed_json_writes_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    target = tmp_path / "out.csv"
    code, out, err = run(["keyrate", "--config", str(bad), "--out", str(target)], capsys)
    assert code == 2 and not target.exists() and out == ""


@pytest.mark.parametrize("doc", [
    {"schema_version": "2"},
    {"schema_version": "1", "extra": 1},
    {"schema_version": "1", "protocol": {"t_bar": 0.9, "colour": "red"}},
    {"schema_version": "1", "sweep": {"axis": "colour", "lo": 0, "hi": 1, "steps": 2}},
])
def test_strict_schema(doc, tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(["keyrate", "--config", str(path), "--tbar", "0.9"], capsys)
    assert code == 2 and err


def test_empty_sweep_is_header_only(capsys):
    code, out, _ = run(["threshold", "--sweep", "t_bar:0.6:0.99:0"], capsys)
    assert code == 0 and out == "T_bar,N_tol,method,residual,status\n"


def test_threshold_point_check(capsys):
    code, out, _ = run(["threshold", "--variant", "rr_one_way_single"], capsys)
    (row,) = rows(out)
    assert abs(float(row["N_tol"]) - 0.3896) <= 5e-4


def test_threshold_sweep_monotone(capsys):
    _, out, _ = run(["threshold", "--sweep", "t_bar:0.6:0.99:40", "--quantity", "eve_variance"], capsys)
    values = [float(r["W_max"]) for r in rows(out)]
    assert len(values) == 40 and all(b >= a for a, b in zip(values, values[1:]))


def test_region_symmetric_corners_and_svd_gain(capsys):
    cfg = str(GOLDEN / "region.json")
    _, plain, _ = run(["region", "--config", cfg], capsys)
    _, boosted, _ = run(["region", "--config", cfg, "--svd-v", "1.05"], capsys)
    p, b = rows(plain), rows(boosted)
    assert p[0]["corner_C"] == p[1]["corner_C"]
    assert float(b[0]["sum_P"]) > float(p[0]["sum_P"])


def test_simulate_identity_channel(tmp_path, capsys):
    doc = {"schema_version": "1",
           "protocol": {"single_carrier_variance": 2.0},
           "ensemble": {"n": 4, "gain": 1.0, "noise_variance": 1e-300},
           "simulate": {"seed": 1, "trials": 1000}}
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(["simulate", "--config", str(path)], capsys)
    assert code == 0
    report = json.loads(out)["report"]
    assert report["max_reconstruction_error"] <= 1e-10
    code2, out2, _ = run(["simulate", "--config", str(path)], capsys)
    assert out2 == out


def test_simulate_requires_seed_and_trials(capsys):
    code, _, err = run(["simulate", "--tbar", "0.5", "--subchannels", "4", "--trials", "1000"], capsys)
    assert code == 2 and "seed" in err


def test_bad_flag_is_parameter_exit(capsys):
    code, _, _ = run(["keyrate", "--no-such-flag"], capsys)
    assert code == 2


def test_format_number():
    assert format_number(1.0) == "1.0"
    assert format_number(0.1 + 0.2) == "0.3"
    assert format_number(1.66096404744361) == "1.66096404744"
    assert format_number(float("inf")) == "inf"
    assert format_number(3) == "3"


def test_schema_declares_version():
    assert CONFIG_SCHEMA["properties"]["schema_version"] == {"const": "1"}
