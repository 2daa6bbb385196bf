import json

import numpy as np
import pytest

from magworm.scenario import (ScenarioParseError, find_scenario, list_scenarios,
                              parse_scenario)

MINIMAL = {
    "schema": "1",
    "design": "boas-big-head-paper",
    "scene": "tank",
}


def test_minimal_defaults_resolved():
    sc = parse_scenario(dict(MINIMAL))
    assert sc.world.scene.name == "tank"
    assert sc.world.rod.design.name == "boas-big-head-paper"
    assert sc.world.magnet is None
    r = sc.resolved
    assert r["schema"] == "1"
    assert r["fluid"] == "water"
    assert r["sim"]["dt"].endswith(" s")
    assert r["robot"]["segment_length"] == "0.0005 m"


def test_resolved_roundtrip_identical():
    doc = {
        "schema": "1",
        "design": "boas-big-head-paper",
        "scene": "serpentine",
        "fluid": "blood-mimic",
        "magnet": {"radius": "15 mm", "height": "30 mm", "magnetization": "750 kA/m",
                   "position": ["0 mm", "0 mm", "-17 mm"], "axis": [-1, 0, 0]},
        "sim": {"duration": "0.5 s"},
        "controller": {"type": "static"},
    }
    sc1 = parse_scenario(doc)
    sc2 = parse_scenario(sc1.resolved)
    assert sc1.resolved == sc2.resolved
    assert sc1.world.config.dt == sc2.world.config.dt
    assert np.array_equal(sc1.world.initial_state.positions,
                          sc2.world.initial_state.positions)


def test_unknown_key_rejected_with_pointer():
    doc = dict(MINIMAL)
    doc["bogus"] = 1
    with pytest.raises(ScenarioParseError, match="/bogus"):
        parse_scenario(doc)
    doc = dict(MINIMAL)
    doc["sim"] = {"dt": "auto", "wrong_key": 2}
    with pytest.raises(ScenarioParseError, match="/sim/wrong_key"):
        parse_scenario(doc)


def test_missing_unit_suffix_rejected():
    doc = dict(MINIMAL)
    doc["sim"] = {"duration": "5"}
    with pytest.raises(ScenarioParseError, match="unit suffix|missing"):
        parse_scenario(doc)


def test_unknown_scene_with_suggestion():
    doc = dict(MINIMAL)
    doc["scene"] = "serpentin"
    with pytest.raises(ScenarioParseError, match="close matches"):
        parse_scenario(doc)


def test_unknown_design_with_suggestion():
    doc = dict(MINIMAL)
    doc["design"] = "boas-big-head"
    with pytest.raises(ScenarioParseError, match="close matches"):
        parse_scenario(doc)


def test_unknown_fluid_preset():
    doc = dict(MINIMAL)
    doc["fluid"] = "watr"
    with pytest.raises(ScenarioParseError, match="/fluid"):
        parse_scenario(doc)


def test_magnet_needs_exactly_one_mode():
    doc = dict(MINIMAL)
    doc["magnet"] = {"radius": "5 mm", "height": "10 mm",
                     "position": ["0 mm", "0 mm", "19 mm"], "axis": [0, 0, 1]}
    with pytest.raises(ScenarioParseError, match="exactly one"):
        parse_scenario(doc)
    doc["magnet"]["magnetization"] = "750 kA/m"
    doc["magnet"]["calibration"] = {"field": "14.95 mT", "distance": "19 mm"}
    with pytest.raises(ScenarioParseError, match="exactly one"):
        parse_scenario(doc)


def test_magnet_calibration_mode():
    doc = dict(MINIMAL)
    doc["magnet"] = {"radius": "5 mm", "height": "10 mm",
                     "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                     "position": ["0 mm", "0 mm", "19 mm"], "axis": [0, 0, 1]}
    sc = parse_scenario(doc)
    assert sc.world.magnet.magnetization == pytest.approx(1.294e6, rel=5e-3)


def test_excessive_dt_rejected_with_both_values():
    doc = dict(MINIMAL)
    doc["sim"] = {"dt": "1e-2 s"}
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(doc)
    msg = str(err.value)
    assert "0.01" in msg and "stability" in msg


def test_design_inline_spec():
    doc = {
        "schema": "1",
        "design": {"variant": "boas-big-head", "fiber_diameter": "75 um",
                   "length": "15 mm", "bead_diameter": "100 um",
                   "head_diameter": "220 um", "name": "inline-bbh"},
        "scene": "tank",
    }
    sc = parse_scenario(doc)
    assert sc.world.rod.design.fiber_diameter == pytest.approx(75e-6)
    assert sc.world.rod.design.bead_geometry.spacing == pytest.approx(7.7 * 75e-6)


def test_fabrication_spec():
    doc = {
        "schema": "1",
        "fabrication": {"variant": "boas-big-head",
                        "calibration_diameter": "622.56 um",
                        "calibration_speed": "6 mm/s",
                        "draw_speed": "135 mm/s",
                        "film_thickness": "60 um",
                        "head_diameter": "350 um",
                        "length": "20 mm"},
        "scene": "tank",
    }
    sc = parse_scenario(doc)
    assert sc.world.rod.design.fiber_diameter == pytest.approx(131.25e-6, rel=1e-4)
    assert sc.world.rod.design.bead_geometry.spacing == pytest.approx(1010.6e-6, rel=1e-4)


def test_builtin_scenarios_parse():
    names = list_scenarios()
    assert "serpentine-navigation.json" in names
    assert "aneurysm-embolization.json" in names
    sc = parse_scenario("aneurysm-embolization")
    assert sc.world.scene.name == "aneurysm"
    assert sc.world.scene.regions["dome_radius"] == pytest.approx(3.786e-3, rel=1e-3)
    assert sc.world.config.self_contact
    sc2 = parse_scenario("serpentine-navigation")
    assert sc2.world.scene.name == "serpentine"
    assert sc2.controller is not None


def test_unsupported_schema_version():
    doc = dict(MINIMAL)
    doc["schema"] = "99"
    with pytest.raises(ScenarioParseError, match="schema"):
        parse_scenario(doc)


def test_find_scenario_missing():
    with pytest.raises(ScenarioParseError, match="not found"):
        find_scenario("no-such-scenario")
