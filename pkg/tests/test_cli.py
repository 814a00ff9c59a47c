import csv
import json
import math
import os
from pathlib import Path

import jsonschema
import pytest

from adquant.cli import COMMANDS, load_config, main

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"

CANTOR_TOML = """\
r = 0
n = 4
n_range = [1, 16]
[measure]
type = "cantor"
depth = 8
[packing]
m = 3
k = [1, 2, 3]
delta = 0.0625
[budgets]
aux = 60
"""


def _schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def _run(tmp_path, command, cfg, *flags, out="out"):
    if isinstance(cfg, dict):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
    else:
        path = tmp_path / "cfg.toml"
        path.write_text(cfg)
    out_dir = tmp_path / out
    code = main([command, "--config", str(path), "--out", str(out_dir), *flags])
    return code, out_dir


def _uniform(**kw):
    return {"measure": {"type": "uniform", "depth": 10}, **kw}


@pytest.fixture(scope="module")
def cantor_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    codes = {}
    for rep in ("a", "b"):
        for cmd in COMMANDS:
            codes[(rep, cmd)], _ = _run(base, cmd, CANTOR_TOML, out=rep)
    return base, codes


def test_all_commands_succeed(cantor_runs):
    _, codes = cantor_runs
    assert set(codes.values()) == {0}


def test_outputs_deterministic(cantor_runs):
    base = cantor_runs[0]
    names = sorted(os.listdir(base / "a"))
    assert names == sorted(os.listdir(base / "b"))
    for name in names:
        assert (base / "a" / name).read_bytes() == (base / "b" / name).read_bytes(), name


def test_json_outputs_validate(cantor_runs):
    out = cantor_runs[0] / "a"
    for f in out.glob("*.json"):
        jsonschema.validate(json.loads(f.read_text()), _schema(f.stem))


def test_csv_headers(cantor_runs):
    out = cantor_runs[0] / "a"
    for f in out.glob("*.csv"):
        with open(f, newline="") as fh:
            header = next(csv.reader(fh))
        assert header and all(not _is_number(h) for h in header), f.name


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def test_packing_phi_increasing(cantor_runs):
    levels = json.loads((cantor_runs[0] / "a" / "packing.json").read_text())["levels"]
    phis = [lv["phi_k"] for lv in levels]
    assert len(phis) == 3 and all(b > a for a, b in zip(phis, phis[1:]))


def test_constants_idealized_delta(cantor_runs):
    K = json.loads((cantor_runs[0] / "a" / "constants.json").read_text())
    assert K["delta"] == 0.0625 and K["M0"] == 10 and K["q"] == 1


def test_aux_tiny_budget_reported(cantor_runs):
    aux = json.loads((cantor_runs[0] / "a" / "aux_integers.json").read_text())
    assert aux["n1"] == "budget-exceeded"


def test_quantize_uniform_two(tmp_path):
    code, out = _run(tmp_path, "quantize", _uniform(n=2, r=0))
    assert code == 0
    q = json.loads((out / "quantize.json").read_text())
    assert q["codebook"] == pytest.approx([0.25, 0.75], abs=1e-3)
    jsonschema.validate(q, _schema("quantize"))


def test_quantize_uniform_one_r2(tmp_path):
    code, out = _run(tmp_path, "quantize", _uniform(n=1, r=2))
    q = json.loads((out / "quantize.json").read_text())
    assert code == 0 and q["codebook"] == pytest.approx([0.5], abs=1e-9)
    assert q["error"] ** 2 == pytest.approx(1 / 12, rel=1e-3)


def test_flags_override_config(tmp_path):
    code, out = _run(tmp_path, "quantize", _uniform(n=2, r=0), "--n", "4")
    q = json.loads((out / "quantize.json").read_text())
    assert code == 0 and q["n"] == 4


def test_verify_theorem_trivial_range(tmp_path):
    code, out = _run(tmp_path, "verify-theorem", _uniform(n_range=[1, 1]))
    t = json.loads((out / "theorem.json").read_text())
    assert code == 0 and t["passed"] and t["d1"] == 1


def test_verify_theorem_uniform_flat(tmp_path):
    code, out = _run(tmp_path, "verify-theorem", _uniform(n_range=[1, 16]))
    t = json.loads((out / "theorem.json").read_text())
    assert code == 0 and t["passed"]
    assert t["d1"] == pytest.approx(1, abs=1e-3) and t["d2"] == pytest.approx(1, abs=1e-3)
    assert (out / "theorem.svg").read_text().startswith("<svg")


def test_gap_report_uniform(tmp_path):
    code, out = _run(tmp_path, "gap-report", _uniform(), "--k", "4")
    g = json.loads((out / "gap.json").read_text())
    assert code == 0 and g["passed"]
    assert g["rows"][0]["gap"] == pytest.approx(math.log(2), abs=1e-9)


@pytest.mark.parametrize("cfg,flags", [
    ({"n": 2}, ()),
    (_uniform(n=0), ()),
    ({"measure": {"type": "nope", "depth": 8}, "n": 2}, ()),
    (_uniform(n=2, r=-1), ()),
    (_uniform(n=2), ("--depth", "x")),
])
def test_config_errors_exit_2(tmp_path, cfg, flags):
    code, _ = _run(tmp_path, "quantize", cfg, *flags)
    assert code == 2


def test_unknown_command_exit_2(tmp_path):
    assert main(["frobnicate", "--config", "x"]) == 2


def test_missing_config_file_exit_2(tmp_path):
    assert main(["quantize", "--config", str(tmp_path / "none.json")]) == 2


def test_budget_violation_exit_3(tmp_path):
    code, out = _run(tmp_path, "quantize", _uniform(n=5000))
    assert code == 3 and not (out / "quantize.json").exists()


def test_toml_and_json_agree(tmp_path):
    toml_cfg = load_config(_write(tmp_path / "c.toml", CANTOR_TOML))
    as_json = {"r": 0, "n": 4, "n_range": [1, 16], "measure": {"type": "cantor", "depth": 8},
               "packing": {"m": 3, "k": [1, 2, 3], "delta": 0.0625}, "budgets": {"aux": 60}}
    json_cfg = load_config(_write(tmp_path / "c.json", json.dumps(as_json)))
    assert toml_cfg == json_cfg
    jsonschema.validate(as_json, _schema("config"))


def _write(path, text):
    path.write_text(text)
    return str(path)
