import copy
import json
import math
import os

import numpy as np
import pytest

from magworm import experiments as xp
from magworm.fabrication import Variant
from magworm.magnetics import cylinder_axial_field


def test_standoff_inversion():
    M = xp.deflection_magnet_M()
    for level in (5e-3, 10e-3, 14.95e-3):
        z = xp.standoff_for_level(level, xp.DEFLECTION_MAGNET_R, xp.DEFLECTION_MAGNET_H, M)
        back = cylinder_axial_field(xp.DEFLECTION_MAGNET_R, xp.DEFLECTION_MAGNET_H, M, z)
        assert back == pytest.approx(level, rel=1e-9)
    with pytest.raises(ValueError, match="range"):
        xp.standoff_for_level(10.0, xp.DEFLECTION_MAGNET_R, xp.DEFLECTION_MAGNET_H, M)


def test_deflection_magnet_calibration():
    assert xp.deflection_magnet_M() == pytest.approx(1.294e6, rel=5e-3)


def test_linear_ramp_kinematics():
    ramp = xp.LinearRamp(position0=np.zeros(3), axis=np.array([-1.0, 0, 0]),
                         accel=0.05, v_ceiling=0.4)
    assert ramp.speed_at(2.0) == pytest.approx(0.1)
    assert ramp.speed_at(100.0) == pytest.approx(0.4)
    # distance: quadratic then linear
    t_sat = 0.4 / 0.05
    assert ramp.distance_at(t_sat) == pytest.approx(0.5 * 0.05 * t_sat**2)
    assert ramp.distance_at(t_sat + 2.0) == pytest.approx(0.5 * 0.05 * t_sat**2 + 0.8)
    pos, axis = ramp.pose_arrays(0, 3, 1.0)
    assert pos[2, 0] == pytest.approx(ramp.distance_at(2.0))
    assert np.allclose(axis, [-1.0, 0, 0])


def _synthetic_deflection_report():
    rep = xp.ExperimentReport(
        experiment="deflection",
        designs=["boas-big-head-x", "other"],
        sweep_variable="field_level_T",
        sweep_values=[0.005, 0.010],
        series={"boas-big-head-x": [1e-3, 2e-3], "other": [0.5e-3, 1e-3]},
        units={"value": "m"})
    return rep


def test_verdicts_recompute_identically():
    rep = _synthetic_deflection_report()
    xp._deflection_verdicts(rep)
    first = [vars(v).copy() for v in rep.verdicts]
    rep2 = copy.deepcopy(rep)
    rep2.verdicts = []
    xp._deflection_verdicts(rep2)
    assert [vars(v) for v in rep2.verdicts] == first
    assert all(v["passed"] for v in first)


def test_deflection_verdict_fails_on_bad_order():
    rep = _synthetic_deflection_report()
    rep.series["other"] = [2e-3, 3e-3]  # beats the beads-with-head design
    xp._deflection_verdicts(rep)
    lead = [v for v in rep.verdicts if "deflects most" in v.criterion]
    assert lead and not lead[0].passed


def test_report_writers(tmp_path):
    rep = _synthetic_deflection_report()
    xp._deflection_verdicts(rep)
    paths = rep.write_all(str(tmp_path))
    assert sorted(os.path.basename(p) for p in paths) == [
        "deflection.csv", "deflection.png", "deflection_verdicts.json"]
    csv = (tmp_path / "deflection.csv").read_text().splitlines()
    assert csv[0] == "field_level_T,design,value_m"
    assert len(csv) == 1 + 2 * 2
    payload = json.loads((tmp_path / "deflection_verdicts.json").read_text())
    assert payload["experiment"] == "deflection"
    assert payload["verdicts"]


def test_speed_verdict_band_notes():
    rep = xp.ExperimentReport(
        experiment="speed", designs=["boas-big-head-y"], sweep_variable="a",
        sweep_values=[0.05], series={"boas-big-head-y": [0.01]}, units={"value": "m/s"})
    xp._speed_verdicts(rep)
    band = [v for v in rep.verdicts if "indicative band" in v.criterion][0]
    # out of band but passed thanks to the explicit limitation note
    assert band.passed
    assert any("model limitation" in n for n in rep.notes)
    rep_in = xp.ExperimentReport(
        experiment="speed", designs=["boas-big-head-y"], sweep_variable="a",
        sweep_values=[0.05], series={"boas-big-head-y": [0.125]}, units={"value": "m/s"})
    xp._speed_verdicts(rep_in)
    band = [v for v in rep_in.verdicts if "indicative band" in v.criterion][0]
    assert band.passed and not rep_in.notes


def test_quartet_selection():
    q = xp.quartet_for("curvature")
    assert q[Variant.BOAS_BIG_HEAD].length == pytest.approx(28e-3)
    assert q[Variant.BOAS_BIG_HEAD].head_diameter == pytest.approx(190e-6)
    q2 = xp.quartet_for("speed")
    assert q2[Variant.BOAS_BIG_HEAD].length == pytest.approx(27e-3)


def test_compare_unknown_experiment():
    q = xp.quartet_for("deflection")
    with pytest.raises(ValueError, match="unknown experiment"):
        xp.compare_designs(list(q.values()), "warp-speed")


def test_design_sweep_grid_validation():
    with pytest.raises(ValueError, match="unknown sweep parameters"):
        xp.design_sweep({"bogus": [1.0]})
    with pytest.raises(ValueError, match="1..1000"):
        xp.design_sweep({"head_diameter": []})


def test_design_with_variants():
    base = xp.quartet_for("deflection")[Variant.BOAS_BIG_HEAD]
    d = xp._design_with(base, head_diameter=250e-6)
    assert d.head_diameter == pytest.approx(250e-6)
    assert d.bead_geometry.spacing == base.bead_geometry.spacing
    d2 = xp._design_with(base, bead_spacing=700e-6)
    assert d2.bead_geometry.spacing == pytest.approx(700e-6)


def test_sweep_table_csv(tmp_path):
    rows = [{"design": "a", "head_diameter": 2e-4, "objective": 1.0},
            {"design": "b", "head_diameter": 3e-4, "objective": float("nan"),
             "note": "failed: x"}]
    path = xp.sweep_table_csv(rows, str(tmp_path), "deflection")
    lines = open(path).read().splitlines()
    assert lines[0] == "design,head_diameter,objective,note"
    assert len(lines) == 3
