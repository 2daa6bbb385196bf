import math
from dataclasses import replace

import numpy as np
import pytest

from magworm import kernels
from magworm.environment import (CargoBody, FLOW_POISEUILLE, FLOW_UNIFORM, SceneError,
                                 ambient_flow, build_scene, contact_force,
                                 dome_arc_fraction, list_scenes, sdf_eval, sdf_value,
                                 serpentine_path)

RNG = np.random.default_rng(11)


def kernel_sdf(scene, p):
    hints = np.full(max(1, scene.prim_kind.shape[0]), -1, dtype=np.int64)
    return kernels.sdf_value(p[0], p[1], p[2], scene.prim_kind, scene.prim_params,
                             scene.poly_pts, scene.poly_off, scene.program, hints)


def test_scene_names():
    assert set(list_scenes()) == {"tank", "serpentine", "three-holes", "bifurcation", "aneurysm"}


def test_unknown_scene_suggestions():
    with pytest.raises(SceneError, match="close matches"):
        build_scene("serpentin")


def test_malformed_spec():
    with pytest.raises(SceneError, match="kind"):
        build_scene({"width": 1e-3})
    with pytest.raises(SceneError, match="serpentine"):
        build_scene({"kind": "serpentine", "bogus_field": 2.0})


def test_tank_probes():
    scene = build_scene("tank")
    assert sdf_value(scene, [0.0, 0.0, 0.2]) == pytest.approx(0.2, rel=1e-12)
    assert sdf_value(scene, [0.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    d, n = sdf_eval(scene, [0.0, 0.0, 1e-3])
    assert d == pytest.approx(1e-3, rel=1e-6)
    assert np.allclose(n, [0.0, 0.0, 1.0])
    # far from all walls along the mid-height track: >= 10x a 15 mm robot
    for xx in np.linspace(-0.02, 0.02, 7):
        assert sdf_value(scene, [xx, 0.0, 0.2]) >= 10 * 15e-3


def test_cylinder_vessel_distance():
    # 4 mm cylindrical vessel: center -> 2 mm
    scene = build_scene("aneurysm")
    assert sdf_value(scene, [-0.02, 0.0, 0.0]) == pytest.approx(2e-3, rel=1e-9)


def test_serpentine_apex_probe():
    scene = build_scene("serpentine")
    # first turn: lead-in 16 mm, radius 0.84 mm, apex at (lead+r, r)
    apex = np.array([16e-3 + 0.84e-3, 0.84e-3, 0.0])
    assert sdf_value(scene, apex) == pytest.approx(0.5e-3, rel=1e-6)
    # wall point
    assert sdf_value(scene, apex + np.array([0.5e-3, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)


def test_serpentine_five_turns():
    radii = (0.84e-3, 1.02e-3, 1.19e-3, 2.20e-3, 2.50e-3)
    path = serpentine_path(radii)
    # total meander rise is the sum of the turn diameters
    rise = path[-1, 1] - path[0, 1]
    assert rise == pytest.approx(2 * sum(radii), rel=1e-9)


def test_aneurysm_dome_geometry():
    scene = build_scene("aneurysm")
    zc = scene.regions["dome_center"][2]
    R = scene.regions["dome_radius"]
    assert zc + R == pytest.approx(9e-3, rel=1e-9)          # artery wall 2mm + 7mm height
    assert R**2 - (2e-3 - zc) ** 2 == pytest.approx((2e-3) ** 2, rel=1e-9)  # 4mm neck
    assert sdf_value(scene, [0.0, 0.0, 9e-3]) == pytest.approx(0.0, abs=1e-12)
    assert scene.self_contact


def test_three_holes_probes():
    scene = build_scene("three-holes")
    plate_z = scene.regions["plate_z"]
    # inside a hole the lumen continues through the plate
    assert sdf_value(scene, [0.0, 0.0, plate_z]) > 0
    # plate material between the holes is solid
    assert sdf_value(scene, [5e-3, 0.0, plate_z]) < 0
    # above the plate is open fluid
    assert sdf_value(scene, [5e-3, 0.0, plate_z + 5e-3]) > 0


def test_contact_force_values():
    n = np.array([0.0, 0.0, 1.0])
    # clear of the wall
    assert np.allclose(contact_force(2e-3, n, np.zeros(3), 1e-3, 10.0, 0.3), 0.0)
    # 10 um penetration at k_c = 10 N/m
    f = contact_force(0.0, n, np.zeros(3), 10e-6, 10.0, 0.3)
    assert np.linalg.norm(f) == pytest.approx(1e-4, rel=1e-12)
    # static body has no tangential force
    assert f[0] == 0.0 and f[1] == 0.0
    # sliding body feels capped Coulomb friction
    f2 = contact_force(0.0, n, np.array([1.0, 0.0, 0.0]), 10e-6, 10.0, 0.3)
    assert f2[0] == pytest.approx(-0.3 * 1e-4, rel=1e-9)


def test_contact_continuity_at_boundary():
    n = np.array([0.0, 0.0, 1.0])
    eps = 1e-12
    f_in = contact_force(1e-3 - eps, n, np.zeros(3), 1e-3, 10.0, 0.3)
    assert np.linalg.norm(f_in) <= 10.0 * eps * 1.001


def test_ambient_flow_default_zero():
    scene = build_scene("tank")
    assert np.allclose(ambient_flow(scene, [0.0, 0.0, 0.1]), 0.0)


def test_ambient_flow_uniform():
    scene = replace(build_scene("tank"), flow_kind=FLOW_UNIFORM,
                    flow_params=np.array([1e-3, 0, 0, 0, 0, 0, 0, 0.0]))
    assert np.allclose(ambient_flow(scene, [0.01, 0.02, 0.1]), [1e-3, 0.0, 0.0])


def test_ambient_flow_poiseuille():
    base = build_scene("serpentine")
    scene = replace(base, flow_kind=FLOW_POISEUILLE,
                    flow_params=np.array([2e-3, 0.5e-3, 0, 0, 0, 0, 0, 0.0]),
                    flow_poly=0)
    u_center = ambient_flow(scene, [1e-3, 0.0, 0.0])
    assert np.linalg.norm(u_center) == pytest.approx(2e-3, rel=1e-9)
    assert u_center[0] > 0  # along the channel
    u_wall = ambient_flow(scene, [1e-3, 0.0, 0.5e-3])
    assert np.linalg.norm(u_wall) == pytest.approx(0.0, abs=1e-12)


def _scene_probe_box(scene):
    pts = scene.poly_pts
    if len(pts):
        lo = pts.min(axis=0) - 5e-3
        hi = pts.max(axis=0) + 5e-3
    else:
        lo = np.array([-0.05, -0.05, -0.01])
        hi = np.array([0.05, 0.05, 0.05])
    return lo, hi


@pytest.mark.parametrize("name", ["tank", "serpentine", "three-holes", "bifurcation", "aneurysm"])
def test_kernel_matches_reference(name):
    scene = build_scene(name)
    lo, hi = _scene_probe_box(scene)
    for _ in range(100):
        p = lo + RNG.random(3) * (hi - lo)
        assert kernel_sdf(scene, p) == pytest.approx(sdf_value(scene, p), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("name", ["tank", "serpentine", "three-holes", "bifurcation", "aneurysm"])
def test_sdf_lipschitz(name):
    scene = build_scene(name)
    lo, hi = _scene_probe_box(scene)
    worst = 0.0
    for _ in range(10_000):
        p = lo + RNG.random(3) * (hi - lo)
        q = lo + RNG.random(3) * (hi - lo)
        dp = kernel_sdf(scene, p)
        dq = kernel_sdf(scene, q)
        gap = np.linalg.norm(p - q)
        if gap > 1e-12:
            worst = max(worst, abs(dp - dq) / gap)
    assert worst <= 1.05


def test_dome_arc_fraction():
    scene = build_scene("aneurysm")
    c = scene.regions["dome_center"]
    # a short polyline fully inside the dome
    inside = np.stack([c + np.array([0.0, 0.0, 0.0]), c + np.array([1e-3, 0.0, 0.0]),
                       c + np.array([1e-3, 1e-3, 0.0])])
    assert dome_arc_fraction(scene, inside) == pytest.approx(1.0)
    outside = np.array([[-0.02, 0.0, 0.0], [-0.015, 0.0, 0.0], [-0.01, 0.0, 0.0]])
    assert dome_arc_fraction(scene, outside) == 0.0


def test_cargo_body_validation():
    with pytest.raises(ValueError):
        CargoBody(radius=0.0, mass=1e-6, position=np.zeros(3), velocity=np.zeros(3))
    c = CargoBody(radius=3.35e-3, mass=38e-6, position=np.zeros(3), velocity=np.zeros(3))
    assert c.mass == pytest.approx(38e-6)
