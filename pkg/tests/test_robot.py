import math

import numpy as np
import pytest

from magworm.designs import get_design, list_designs, paper_quartet
from magworm.fabrication import (MaterialSet, RobotDesign, Variant,
                                 calibrate_draw_constant, design_from_fabrication,
                                 predict_bead_geometry)
from magworm.magnetics import MU0
from magworm.robot import (MagnetizationError, MagnetizationPolicy, ResolutionError,
                           assign_magnetization, composite_section_stiffness, discretize)

UM = 1e-6


def plain_fiber(length=20e-3, d=100e-6):
    return RobotDesign(Variant.FIBER_BIG_HEAD, d, length, head_diameter=d,
                       materials=MaterialSet(), name="t")


def test_discretize_counts():
    rod = discretize(plain_fiber(20e-3), 0.5e-3)
    assert rod.n_segments == 40
    assert rod.n_nodes == 41
    assert rod.length == pytest.approx(20e-3, rel=1e-12)


def test_discretize_remainder_absorbed():
    rod = discretize(plain_fiber(20.3e-3), 0.5e-3)
    assert rod.n_segments == 40
    assert rod.seg_l0[-1] == pytest.approx(0.8e-3, rel=1e-9)
    assert rod.seg_l0[0] == pytest.approx(0.5e-3, rel=1e-12)


def test_discretize_resolution_error():
    with pytest.raises(ResolutionError):
        discretize(plain_fiber(20e-3), 3e-3)  # < 10 segments


def test_beads_every_second_node():
    model = calibrate_draw_constant(100 * UM, 1e-3)  # C such that D=100um at 1 mm/s
    design = design_from_fabrication(Variant.BOAS_BIG_HEAD, model, 1e-3, 50 * UM,
                                     head_diameter=220 * UM, length=15.4e-3)
    assert design.bead_geometry.spacing == pytest.approx(770 * UM, rel=1e-12)
    rod = discretize(design, 0.385e-3)
    body_beads = rod.bead_node[:-1]  # last entry is the head
    assert np.all(np.diff(body_beads) == 2)
    assert rod.bead_node[-1] == rod.n_nodes - 1


def test_fiber_big_head_single_bead_entry():
    rod = discretize(plain_fiber(), 0.5e-3)
    assert len(rod.bead_node) == 1
    assert rod.bead_node[0] == rod.n_nodes - 1


def test_mass_conservation_resolution_independent():
    quartet = paper_quartet(15e-3, 220e-6)
    for design in quartet.values():
        expected = design.total_mass()
        for target in (0.25e-3, 0.5e-3, 1.0e-3):
            rod = discretize(design, target)
            assert rod.total_mass == pytest.approx(expected, rel=1e-6)


def test_section_stiffness_bare_fiber():
    sec = composite_section_stiffness(plain_fiber(), 5e-3)
    assert sec.EI == pytest.approx(1.080e-10, rel=1e-3)
    assert sec.EA == pytest.approx(0.1728, rel=1e-3)


def test_section_stiffness_with_layer():
    design = RobotDesign(Variant.MAGNETIC_LAYER, 100e-6, 20e-3, layer_thickness=20e-6,
                         materials=MaterialSet(), name="ml")
    sec = composite_section_stiffness(design, 5e-3)
    assert sec.EI == pytest.approx(1.136e-10, rel=1e-3)


def test_section_stiffness_layer_limit_is_bare():
    design = RobotDesign(Variant.MAGNETIC_LAYER, 100e-6, 20e-3, layer_thickness=1e-12,
                         materials=MaterialSet(), name="ml0")
    sec = composite_section_stiffness(design, 5e-3)
    bare = composite_section_stiffness(plain_fiber(), 5e-3)
    assert sec.EI == pytest.approx(bare.EI, rel=1e-9)


def test_section_stiffness_bead_footprint():
    geom = predict_bead_geometry(100e-6, 50e-6)
    design = RobotDesign(Variant.BOAS, 100e-6, 20e-3, bead_geometry=geom,
                         materials=MaterialSet(), name="b")
    s_bead = design.bead_positions()[0]
    on_bead = composite_section_stiffness(design, s_bead)
    off_bead = composite_section_stiffness(design, s_bead + geom.spacing / 2.0)
    assert on_bead.EI > off_bead.EI
    assert off_bead.EI == pytest.approx(1.080e-10, rel=1e-3)


def test_section_out_of_range():
    with pytest.raises(ValueError):
        composite_section_stiffness(plain_fiber(), 21e-3)


def test_node_EI_matches_section_at_nodes():
    design = get_design("magnetic-layer-paper")
    rod = discretize(design, 0.5e-3)
    s = np.concatenate([[0.0], np.cumsum(rod.seg_l0)])
    for i in (0, 5, rod.n_nodes - 1):
        assert rod.node_EI[i] == pytest.approx(
            composite_section_stiffness(design, min(s[i], design.length)).EI, rel=1e-12)


def test_assign_magnetization_head_sphere():
    design = RobotDesign(Variant.FIBER_BIG_HEAD, 100e-6, 20e-3, head_diameter=220e-6,
                         materials=MaterialSet(), name="h")
    rod = assign_magnetization(discretize(design, 0.5e-3), 5e-3)
    assert rod.bead_moment[-1] == pytest.approx(2.218e-8, rel=1e-3)


def test_assign_magnetization_film_bead():
    geom = predict_bead_geometry(100e-6, 50e-6)
    assert geom.bead_volume == pytest.approx(1.814e-11, rel=1e-3)
    design = RobotDesign(Variant.BOAS, 100e-6, 20e-3, bead_geometry=geom,
                         materials=MaterialSet(), name="b")
    rod = assign_magnetization(discretize(design, 0.5e-3), 5e-3)
    assert rod.bead_moment[0] == pytest.approx(7.218e-8, rel=1e-3)
    assert rod.bead_moment[0] == pytest.approx(5e-3 * geom.bead_volume / MU0, rel=1e-12)


def test_dipole_linearity_in_remanence():
    rod0 = discretize(get_design("boas-big-head-paper"), 0.5e-3)
    r1 = assign_magnetization(rod0, 5e-3)
    r2 = assign_magnetization(rod0, 10e-3)
    assert np.allclose(r2.bead_moment, 2.0 * r1.bead_moment, rtol=1e-15)


def test_magnetization_requires_positive_remanence():
    rod = discretize(get_design("boas-big-head-paper"), 0.5e-3)
    with pytest.raises(MagnetizationError):
        assign_magnetization(rod, 0.0)


def test_magnetization_policies():
    rod0 = discretize(get_design("boas-big-head-paper"), 0.5e-3)
    along = assign_magnetization(rod0, 5e-3, MagnetizationPolicy.ALONG_BODY)
    assert np.allclose(along.bead_dir, [1.0, 0.0, 0.0])
    trans = assign_magnetization(rod0, 5e-3, MagnetizationPolicy.TRANSVERSE_UNIFORM)
    assert np.allclose(np.abs(trans.bead_dir @ np.array([1.0, 0, 0])), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(trans.bead_dir, axis=1), 1.0)
    cust = assign_magnetization(rod0, 5e-3, MagnetizationPolicy.CUSTOM, custom_dir=[0, 3, 4])
    assert np.allclose(cust.bead_dir, [0.0, 0.6, 0.8])


def test_quartet_registry():
    names = list_designs()
    for expected in ("boas-big-head-paper", "boas-paper", "magnetic-layer-paper",
                     "fiber-big-head-paper"):
        assert expected in names
    with pytest.raises(KeyError, match="close matches"):
        get_design("boas-big-hed-paper")


def test_quartet_shared_max_diameter():
    q = paper_quartet(15e-3, 220e-6)
    assert q[Variant.BOAS_BIG_HEAD].head_diameter == 220e-6
    assert q[Variant.FIBER_BIG_HEAD].head_diameter == 220e-6
    ml = q[Variant.MAGNETIC_LAYER]
    assert ml.fiber_diameter + 2 * ml.layer_thickness == pytest.approx(220e-6)
    assert q[Variant.BOAS].aspect_ratio > 100


def test_drag_and_body_radii():
    rod = discretize(get_design("boas-big-head-paper"), 0.5e-3)
    assert rod.drag_radius[-1] == pytest.approx(110e-6)
    body_bead = rod.bead_node[0]
    assert rod.drag_radius[body_bead] == pytest.approx(50e-6)
    assert rod.body_radius[0] == pytest.approx(37.5e-6)
