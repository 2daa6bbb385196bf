"""Viscous drag: anisotropic slender-body coefficients for rod segments and Stokes
drag for spheres (beads, head, cargo). Linear in velocity; Reynolds effects ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SlendernessError(ValueError):
    """Slender-body coefficients requested for a body that is not slender."""


@dataclass(frozen=True)
class Fluid:
    density: float            # kg/m^3
    dynamic_viscosity: float  # Pa*s

    def __post_init__(self):
        if not (self.density > 0.0 and self.dynamic_viscosity > 0.0):
            raise ValueError("fluid density and viscosity must be positive")


# "paper-fem" preserves the source FEM's stated 0.1 mPa*s even though it is 10x below
# water; scenario defaults use water. blood-mimic sits mid-range of human blood.
FLUID_PRESETS: dict[str, Fluid] = {
    "water": Fluid(density=1000.0, dynamic_viscosity=1.0e-3),
    "blood-mimic": Fluid(density=1200.0, dynamic_viscosity=3.5e-3),
    "paper-fem": Fluid(density=1000.0, dynamic_viscosity=0.1e-3),
}


def rft_coefficients(viscosity: float, body_length: float, diameter: float) -> tuple[float, float]:
    """Tangential and normal drag per unit length per unit velocity (Pa*s).

    c_t = 2 pi mu / (ln(2L/d) - 1/2),  c_n = 4 pi mu / (ln(2L/d) + 1/2).
    """
    if not body_length > diameter > 0.0:
        raise SlendernessError(
            f"need body length > diameter > 0, got L={body_length}, d={diameter}")
    log_term = math.log(2.0 * body_length / diameter)
    c_t = 2.0 * math.pi * viscosity / (log_term - 0.5)
    c_n = 4.0 * math.pi * viscosity / (log_term + 0.5)
    return c_t, c_n


def segment_drag(v_rel: np.ndarray, tangent: np.ndarray, c_t: float, c_n: float,
                 segment_length: float) -> np.ndarray:
    """Drag force on one rod segment moving at v_rel relative to the ambient fluid."""
    t = np.asarray(tangent, dtype=float).reshape(3)
    v = np.asarray(v_rel, dtype=float).reshape(3)
    v_t = (v @ t) * t
    v_n = v - v_t
    return -(c_t * v_t + c_n * v_n) * segment_length


def sphere_drag(radius: float, v_rel: np.ndarray, viscosity: float) -> np.ndarray:
    """Stokes drag -6 pi mu R v on a sphere."""
    if not radius > 0.0:
        raise ValueError(f"sphere radius must be positive, got {radius}")
    return -6.0 * math.pi * viscosity * radius * np.asarray(v_rel, dtype=float)
