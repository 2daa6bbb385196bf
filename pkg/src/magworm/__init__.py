"""magworm: reduced-order physics and design toolkit for slender magnetic filament robots."""

__version__ = "0.1.0"

from magworm.fabrication import (
    ThermalDrawModel,
    FilmSpec,
    BeadGeometry,
    MaterialSet,
    RobotDesign,
    Variant,
    FilmState,
    calibrate_draw_constant,
    predict_fiber_diameter,
    critical_film_thickness,
    film_breakup_decision,
    predict_bead_geometry,
    design_from_fabrication,
)
from magworm.magnetics import MagnetSource, FieldSample, MU0
from magworm.robot import DiscreteRod, discretize, assign_magnetization
from magworm.engine import World, SimConfig, Trajectory, run, stability_dt

__all__ = [
    "__version__",
    "ThermalDrawModel",
    "FilmSpec",
    "BeadGeometry",
    "MaterialSet",
    "RobotDesign",
    "Variant",
    "FilmState",
    "calibrate_draw_constant",
    "predict_fiber_diameter",
    "critical_film_thickness",
    "film_breakup_decision",
    "predict_bead_geometry",
    "design_from_fabrication",
    "MagnetSource",
    "FieldSample",
    "MU0",
    "DiscreteRod",
    "discretize",
    "assign_magnetization",
    "World",
    "SimConfig",
    "Trajectory",
    "run",
    "stability_dt",
]
