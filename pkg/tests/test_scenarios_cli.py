from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import pytest

from prequantum.action import PathSample, write_path_csv
from prequantum.analysis import run_analysis
from prequantum.cli import main
from prequantum.errors import ParseError, SchemaError
from prequantum.geometry import FlatTorus
from prequantum.periods import ExactReal, generate
from prequantum.scenarios import BUILTIN_ORDER, builtin_document, load_schema, load_scenario

ROOT = Path(__file__).resolve().parents[1]


@pytest.mark.parametrize("name", ["scenario", "report"])
def test_docs_schemas_match_package_copies(name):
    docs = json.loads((ROOT / "docs" / f"{name}.schema.json").read_text())
    assert docs == load_schema(name)
    jsonschema.Draft202012Validator.check_schema(docs)


@pytest.mark.parametrize("name", BUILTIN_ORDER)
def test_builtins_are_schema_valid(name):
    jsonschema.validate(builtin_document(name), load_schema("scenario"))


def test_builtin_expectations():
    assert load_scenario("torus-unit").P_omega.describe() == "Z"
    assert not load_scenario("s2xs2-irrational", grid=(128, 128)).P_omega.discrete
    g2 = load_scenario("genus-2-declared")
    # the area is a declared symbol, so the group is area·Z with area = 3
    assert g2.P_omega == generate([ExactReal.symbol(g2.basis, "area")])
    assert float(g2.P_omega.canonical_generator) == 3.0


def test_malformed_relation_names_generator():
    doc = builtin_document("torus-unit")
    doc["presentation"]["relations"] = ["A B C A^-1"]
    with pytest.raises(SchemaError, match="'C'"):
        load_scenario(doc)


def test_schema_violation_reports_location():
    doc = builtin_document("torus-unit")
    doc["grid"] = [4, 256]
    with pytest.raises(SchemaError, match="grid"):
        load_scenario(doc)


def test_parse_error_location(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "name": "x",\n  "space": {kind}\n}')
    with pytest.raises(ParseError, match=r"bad.json:3:\d+"):
        load_scenario(str(f))


def test_reference_csv(tmp_path):
    write_path_csv(tmp_path / "ref.csv", PathSample(FlatTorus(), [[0, 0], [0.25, 0.1], [0.5, 0.25]]))
    doc = builtin_document("torus-unit")
    doc["marked_points"] = [{"name": "x1", "point": [0.5, 0.25], "reference_csv": "ref.csv"}]
    f = tmp_path / "scn.json"
    f.write_text(json.dumps(doc))
    scn = load_scenario(str(f))
    assert scn.references["x1"].N == 2


def test_report_profiles_consistent():
    rep = run_analysis(load_scenario("punctured-plane-magnetic", grid=(64, 64)))
    by_label = {}
    for label, s, v in rep.profiles:
        by_label.setdefault(label, []).append((s, v))
    for h in rep.data["homotopies"]:
        rows = by_label[h["label"]]
        assert len(rows) == h["S"] + 1
        assert abs(rows[-1][1] - h["action"]) <= 1e-12


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_list(capsys):
    code, out, _ = run_cli(["list-scenarios"], capsys)
    assert code == 0
    assert [line.split("\t")[0] for line in out.splitlines()] == list(BUILTIN_ORDER)


def test_cli_analyze_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PREQUANTUM_OUT", str(tmp_path / "env"))
    code, out, _ = run_cli(["analyze", "torus-unit", "--grid", "64,64", "--emit", "json,csv"], capsys)
    assert code == 0
    report = tmp_path / "env" / "torus-unit.report.json"
    data = json.loads(report.read_text())
    jsonschema.validate(data, load_schema("report"))
    assert data["P_omega"]["describe"] == "Z"
    with open(tmp_path / "env" / "action_profiles.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"label", "s", "cumulative_action"}
    for h in data["homotopies"]:
        mine = [r for r in rows if r["label"] == h["label"]]
        assert len(mine) == h["S"] + 1
        assert abs(float(mine[-1]["cumulative_action"]) - h["action"]) <= 1e-12


def test_cli_report_is_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        assert run_cli(["analyze", "s2xs2-rational", "--grid", "128,128", "--out", str(tmp_path / d)], capsys)[0] == 0
    a = (tmp_path / "a" / "s2xs2-rational.report.json").read_bytes()
    b = (tmp_path / "b" / "s2xs2-rational.report.json").read_bytes()
    assert a == b
    data = json.loads(a)
    assert data["P_omega"]["canonical_generator"] == "1/3*s1"


def test_cli_input_errors(tmp_path, capsys):
    assert run_cli(["analyze", "no-such-scenario"], capsys)[0] == 2
    assert run_cli(["analyze", "torus-unit", "--grid", "3,x"], capsys)[0] == 2
    assert run_cli(["analyze", "torus-unit", "--emit", "pdf"], capsys)[0] == 2
    doc = builtin_document("torus-unit")
    doc["presentation"]["relations"] = ["A Q"]
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(doc))
    code, _, err = run_cli(["analyze", str(f)], capsys)
    assert code == 2 and "'Q'" in err


def test_cli_coarse_grid_is_a_check_failure(capsys):
    code, _, err = run_cli(["analyze", "s2xs2-rational", "--grid", "16,16", "--out", "/nonexistent-unused"], capsys)
    assert code == 1 and "error estimate" in err


def test_cli_check_failure_exit_code(tmp_path, capsys):
    doc = builtin_document("torus-unit")
    doc["expected_P_omega"] = ["1/2"]
    f = tmp_path / "wrong.json"
    f.write_text(json.dumps(doc))
    code, out, _ = run_cli(["analyze", str(f), "--grid", "32,32", "--out", str(tmp_path)], capsys)
    assert code == 1
    assert "FAIL" in out


def test_cli_verify_single(tmp_path, capsys):
    code, out, _ = run_cli(["verify", "--suite", "aharonov-bohm", "--out", str(tmp_path)], capsys)
    assert code == 0
    data = json.loads((tmp_path / "aharonov-bohm.report.json").read_text())
    assert data["passed"] and data["holonomy"]["describe"] == "(1/2)·Z"
    assert data["moduli"]["h1"]["describe"] == "T_ω"
