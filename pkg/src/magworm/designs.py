"""Built-in design cards.

The comparison quartet is a geometry reconstruction: the source experiments state
only the length, the set's maximum diameter and the 100 um bead size of the
beads-with-head build. Here both beaded variants share the same 75 um fiber and
100 um bead string, the big heads take the quoted maximum diameter, and the
layered variant reaches that same maximum diameter with a 20 um coating on a
correspondingly thicker fiber.
"""

from __future__ import annotations

import math

from magworm.fabrication import BeadGeometry, MaterialSet, RobotDesign, Variant

QUARTET_FIBER_DIAMETER = 75e-6
QUARTET_BEAD_DIAMETER = 100e-6
LAYER_THICKNESS = 20e-6


def _sphere_volume(diameter: float) -> float:
    return (4.0 / 3.0) * math.pi * (diameter / 2.0) ** 3


def _bead_string(fiber_diameter: float, bead_diameter: float) -> BeadGeometry:
    return BeadGeometry(
        spacing=7.7 * fiber_diameter,
        spacing_interval=(6.3 * fiber_diameter, 9.1 * fiber_diameter),
        bead_volume=_sphere_volume(bead_diameter),
        axes_ratio=1.0,
    )


def paper_quartet(length: float, max_diameter: float,
                  materials: MaterialSet | None = None,
                  name_suffix: str = "") -> dict[Variant, RobotDesign]:
    """The four comparison variants at a given length and maximum outer diameter."""
    materials = materials or MaterialSet()
    beads = _bead_string(QUARTET_FIBER_DIAMETER, QUARTET_BEAD_DIAMETER)
    sfx = name_suffix
    return {
        Variant.BOAS_BIG_HEAD: RobotDesign(
            Variant.BOAS_BIG_HEAD, QUARTET_FIBER_DIAMETER, length,
            bead_geometry=beads, head_diameter=max_diameter, materials=materials,
            name=f"boas-big-head{sfx}"),
        Variant.BOAS: RobotDesign(
            Variant.BOAS, QUARTET_FIBER_DIAMETER, length,
            bead_geometry=beads, materials=materials, name=f"boas{sfx}"),
        Variant.MAGNETIC_LAYER: RobotDesign(
            Variant.MAGNETIC_LAYER, max_diameter - 2.0 * LAYER_THICKNESS, length,
            layer_thickness=LAYER_THICKNESS, materials=materials,
            name=f"magnetic-layer{sfx}"),
        Variant.FIBER_BIG_HEAD: RobotDesign(
            Variant.FIBER_BIG_HEAD, QUARTET_FIBER_DIAMETER, length,
            head_diameter=max_diameter, materials=materials,
            name=f"fiber-big-head{sfx}"),
    }


# demo robots carry a bench-plausible composite remanence: the 5 mT value used by
# the characterization defaults matches the source FEM but underestimates a cured
# 1:1 NdFeB-silicone mix by an order of magnitude, and the steering demos need
# the real maneuvering authority to round 0.84 mm turns with a hand-scale magnet
DEMO_REMANENCE = 100e-3


def _demo_materials() -> MaterialSet:
    return MaterialSet(remanence=DEMO_REMANENCE)


def _registry() -> dict[str, RobotDesign]:
    deflection = paper_quartet(length=15e-3, max_diameter=220e-6, name_suffix="-paper")
    designs = {d.name: d for d in deflection.values()}
    designs["boas-big-head-speed"] = RobotDesign(
        Variant.BOAS_BIG_HEAD, QUARTET_FIBER_DIAMETER, 27e-3,
        bead_geometry=_bead_string(QUARTET_FIBER_DIAMETER, QUARTET_BEAD_DIAMETER),
        head_diameter=220e-6, name="boas-big-head-speed")
    designs["boas-big-head-curvature"] = RobotDesign(
        Variant.BOAS_BIG_HEAD, QUARTET_FIBER_DIAMETER, 28e-3,
        bead_geometry=_bead_string(QUARTET_FIBER_DIAMETER, QUARTET_BEAD_DIAMETER),
        head_diameter=190e-6, name="boas-big-head-curvature")
    designs["boas-big-head-nav"] = RobotDesign(
        Variant.BOAS_BIG_HEAD, QUARTET_FIBER_DIAMETER, 15e-3,
        bead_geometry=_bead_string(QUARTET_FIBER_DIAMETER, QUARTET_BEAD_DIAMETER),
        head_diameter=220e-6, materials=_demo_materials(), name="boas-big-head-nav")
    designs["boas-big-head-embolic"] = RobotDesign(
        Variant.BOAS_BIG_HEAD, QUARTET_FIBER_DIAMETER, 18e-3,
        bead_geometry=_bead_string(QUARTET_FIBER_DIAMETER, QUARTET_BEAD_DIAMETER),
        head_diameter=220e-6, materials=_demo_materials(), name="boas-big-head-embolic")
    designs["cargo-carrier"] = RobotDesign(
        Variant.BOAS_BIG_HEAD, 120e-6, 60e-3,
        bead_geometry=_bead_string(120e-6, 160e-6),
        head_diameter=350e-6, materials=_demo_materials(), name="cargo-carrier")
    return designs


DESIGNS: dict[str, RobotDesign] = _registry()


def list_designs() -> list[str]:
    return sorted(DESIGNS)


def get_design(name: str) -> RobotDesign:
    try:
        return DESIGNS[name]
    except KeyError:
        import difflib
        hint = difflib.get_close_matches(name, DESIGNS, n=3)
        raise KeyError(f"unknown design {name!r}; close matches: {hint or sorted(DESIGNS)}") from None
