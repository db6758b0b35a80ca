import json
import math
import os
import pathlib

import pytest

import hforge

SOURCE = pathlib.Path(os.environ.get("HFORGE_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
SCENARIOS = SOURCE / "scenarios"


def twist():
    return hforge.load_scenario(str(SCENARIOS / "twist_two_mode.json"))


def test_scenarios_load():
    s = twist()
    assert s.name == "twist_two_mode"
    assert s.commands == ["holonomy-scan", "kill-holonomy", "interpolate"]
    assert "kill-holonomy" in hforge.command_names()


def test_parse_errors_map_to_python():
    with pytest.raises(hforge.ParseError):
        hforge.parse_scenario("{")
    with pytest.raises(ValueError):
        hforge.parse_scenario(json.dumps({"format_version": 1, "colour": "red"}))


def test_precondition_error():
    s = hforge.parse_scenario(json.dumps({"format_version": 1, "base_density": "cos(y)"}))
    with pytest.raises(hforge.PreconditionError):
        hforge.generators(s)


def test_generators_of_initial_form():
    g = hforge.generators(twist(), per_unit=128)
    assert g == pytest.approx([1.0, 1.0, 0.5, 0.5], abs=1e-5)


def test_holonomy_residuals():
    r = hforge.holonomy_residuals(twist(), [0.2, math.pi / 3])
    assert r[0] > 1e-3
    assert r[1] < 1e-8
    assert len(hforge.scan_latitudes()) == 37


def test_run_dehn_demo():
    out = hforge.run(twist(), ["dehn-demo"])
    assert out["ok"]
    assert "dehn.csv" in out["files"]
    assert out["files"]["report.csv"].startswith("format_version,stage,check")
    names = {c["check"] for c in out["checks"]}
    assert "inverse_defect" in names


def test_interpolation_check():
    w = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]]
    w2 = [[0, 2, 0, 0], [-2, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]]
    plane = [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    assert hforge.pfaffian(w) == 1.0
    res = hforge.linear_interpolation_check(w, w2, plane)
    assert res["accepted"] and res["positive"]
    assert res["min_pfaffian"] == pytest.approx(1.0)
