import csv
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from gfnets import config as C
from gfnets.cli import run

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SCHEMA = json.loads((ROOT / "src" / "gfnets" / "schema" / "config.schema.json").read_text())

EXPECTED = {
    "moderate_sin.toml": 0,
    "negligible_cube.toml": 0,
    "neither_exp.toml": 1,
    "seeley_L8.toml": 0,
    "embed_sin.toml": 0,
    "embed_derivative.toml": 0,
    "decompose_aa.toml": 0,
    "decompose_corrupted.toml": 1,
    "compose_exp.toml": 0,
    "solve_lse.toml": 0,
    "solve_matrix.toml": 0,
    "verify_neutral.toml": 0,
    "verify_neutral_wrong.json": 1,
    "primitive_exp.toml": 0,
}


def subcommand_for(name):
    for sub in C.SUBCOMMANDS:
        if name.startswith(sub):
            return sub
    return {"moderate": "classify", "negligible": "classify", "neither": "classify"}[name.split("_")[0]]


def test_every_config_is_covered():
    assert sorted(p.name for p in CONFIGS.iterdir()) == sorted(EXPECTED)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_config_matches_schema(name):
    jsonschema.validate(C.load_file(CONFIGS / name), SCHEMA)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_bundled_config(name, tmp_path):
    out = tmp_path / "r.json"
    code = run([subcommand_for(name), "--config", str(CONFIGS / name), "--out", str(out)])
    assert code == EXPECTED[name]
    rep = json.loads(out.read_text())
    assert rep["verdict"] == ("pass" if code == 0 else "fail")
    assert set(rep) >= {"gfnets_version", "subcommand", "config", "result", "verdict"}


def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(["classify", "--config", str(CONFIGS / "moderate_sin.toml"), "--out", str(p), "--seed", "7"])
    assert a.read_bytes() == b.read_bytes()


def test_sidecars(tmp_path):
    out, tab, ser = tmp_path / "r.json", tmp_path / "t.csv", tmp_path / "s.json"
    code = run(["classify", "--config", str(CONFIGS / "moderate_sin.toml"), "--out", str(out),
                "--csv", str(tab), "--series", str(ser), "--schedule", "0.5,0.7,8"])
    assert code == 0
    rows = list(csv.reader(tab.open()))
    assert len(rows) == 1 + 8
    assert json.loads(out.read_text())["config"]["schedule"]["n"] == 8
    assert json.loads(ser.read_text())


def test_seeley_override(tmp_path):
    out = tmp_path / "r.json"
    assert run(["seeley", "--config", str(CONFIGS / "seeley_L8.toml"), "--L", "2", "--out", str(out)]) == 0
    res = json.loads(out.read_text())["result"]
    assert res["sequence"]["a"] == [3.0, -2.0]
    assert res["sequence"]["b"] == [-1.0, -2.0]


def test_missing_config_file():
    assert run(["classify", "--config", "/nonexistent/x.toml"]) == 2


def test_missing_required_key(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"domain": "R"}))
    assert run(["classify", "--config", str(p)]) == 2


def test_bad_expression_is_usage_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"net": "sin(x/eps"}))
    assert run(["classify", "--config", str(p)]) == 2


def test_bad_schedule_and_subcommand():
    assert run(["classify", "--schedule", "0.5,0.7"]) == 2
    assert run(["bogus"]) == 2


def test_table_named_after_subcommand():
    cfg = C.resolve("classify", {"classify": {"net": "x"}, "kmax": 1})
    assert cfg["net"] == "x" and cfg["kmax"] == 1
    assert cfg["schedule"] == C.DEFAULTS["schedule"]


def test_resolve_validation():
    with pytest.raises(C.ConfigError):
        C.resolve("classify", {"net": "x", "kmax": -1})
    with pytest.raises(C.ConfigError):
        C.resolve("classify", {"net": "x", "schedule": {"ratio": 1.5}})


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gfnets.cli", "classify", "--config",
                           str(CONFIGS / "moderate_sin.toml")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]
