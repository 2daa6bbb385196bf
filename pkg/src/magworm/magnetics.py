"""Permanent-magnet source models: point-dipole field/gradient, exact axial cylinder
field for calibration, and the wrench on a bead dipole.

The guiding magnet is reduced to a single point dipole at its center; beads receive
field but do not source it (their remanence is orders of magnitude below the magnet).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MU0 = 4.0e-7 * math.pi  # T*m/A


class SingularityError(ValueError):
    """Field requested at the source point itself."""


@dataclass(frozen=True)
class MagnetSource:
    """Axially magnetized cylindrical magnet with a pose.

    radius/height in m, magnetization in A/m; moment_axis is the unit vector of the
    magnetization direction in world coordinates.
    """

    radius: float
    height: float
    magnetization: float
    position: np.ndarray
    moment_axis: np.ndarray

    def __post_init__(self):
        if not (self.radius > 0.0 and self.height > 0.0 and self.magnetization > 0.0):
            raise ValueError("radius, height and magnetization must be positive")
        pos = np.asarray(self.position, dtype=float).reshape(3)
        axis = np.asarray(self.moment_axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if not norm > 0.0:
            raise ValueError("moment axis must be a nonzero vector")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "moment_axis", axis / norm)

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * self.height

    @property
    def dipole_moment(self) -> float:
        """Scalar moment |m| = M * V in A*m^2."""
        return self.magnetization * self.volume

    @property
    def moment_vector(self) -> np.ndarray:
        return self.dipole_moment * self.moment_axis

    def with_pose(self, position, moment_axis) -> "MagnetSource":
        return MagnetSource(self.radius, self.height, self.magnetization,
                            np.asarray(position, float), np.asarray(moment_axis, float))


@dataclass(frozen=True)
class FieldSample:
    B: np.ndarray      # T, shape (3,)
    gradB: np.ndarray  # T/m, shape (3,3), dB_i/dx_j


def dipole_field(source: MagnetSource, r: np.ndarray) -> np.ndarray:
    """B at point(s) r (m) from the point-dipole reduction of the magnet."""
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    pts = np.atleast_2d(r) - source.position
    dist = np.linalg.norm(pts, axis=1)
    if np.any(dist <= 0.0):
        raise SingularityError("field evaluation at the magnet center")
    n = pts / dist[:, None]
    m = source.moment_vector
    mdotn = n @ m
    B = (MU0 / (4.0 * math.pi)) * (3.0 * n * mdotn[:, None] - m) / dist[:, None] ** 3
    return B[0] if single else B


def dipole_field_gradient(source: MagnetSource, r: np.ndarray) -> np.ndarray:
    """Analytic gradient dB_i/dx_j (3x3) of the dipole field; symmetric and traceless."""
    rv = np.asarray(r, dtype=float).reshape(3) - source.position
    dist = float(np.linalg.norm(rv))
    if dist <= 0.0:
        raise SingularityError("gradient evaluation at the magnet center")
    n = rv / dist
    m = source.moment_vector
    mdotn = float(m @ n)
    k = 3.0 * MU0 / (4.0 * math.pi * dist**4)
    eye = np.eye(3)
    grad = k * (mdotn * eye + np.outer(n, m) + np.outer(m, n) - 5.0 * mdotn * np.outer(n, n))
    return grad


def field_sample(source: MagnetSource, r: np.ndarray) -> FieldSample:
    return FieldSample(B=dipole_field(source, r), gradB=dipole_field_gradient(source, r))


def cylinder_axial_field(radius: float, height: float, magnetization: float,
                         z_from_near_face: float) -> float:
    """Exact on-axis flux density of an axially magnetized cylinder.

    z is measured outward from the near face; valid for z >= 0. Serves as the
    calibration oracle against gaussmeter readings.
    """
    if z_from_near_face < 0.0:
        raise ValueError(f"z must be >= 0 (outside the magnet), got {z_from_near_face}")
    z, h, R = z_from_near_face, height, radius
    return (MU0 * magnetization / 2.0) * (
        (z + h) / math.hypot(z + h, R) - z / math.hypot(z, R)
    )


def calibrate_magnet_magnetization(radius: float, height: float, z_from_near_face: float,
                                   B_measured: float) -> float:
    """Invert the axial-field formula for M (linear); B_measured = 0 maps to M = 0."""
    if B_measured < 0.0:
        raise ValueError(f"measured field must be >= 0, got {B_measured}")
    unit_field = cylinder_axial_field(radius, height, 1.0, z_from_near_face)
    return B_measured / unit_field


def bead_wrench(moment: np.ndarray, B: np.ndarray, gradB: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Force and torque on a point dipole: F = (gradB)^T m, tau = m x B."""
    m = np.asarray(moment, dtype=float).reshape(3)
    force = np.asarray(gradB, dtype=float).T @ m
    torque = np.cross(m, np.asarray(B, dtype=float).reshape(3))
    return force, torque
