"""Design card -> discrete rod: nodes, composite section stiffness, lumped masses,
drag radii and bead dipoles. The rod is immutable after build.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from magworm.fabrication import RobotDesign, Variant
from magworm.magnetics import MU0


class ResolutionError(ValueError):
    """Discretization too coarse for the requested design."""


class MagnetizationError(ValueError):
    """Invalid magnetization request (zero-volume bead, non-positive remanence)."""


@dataclass(frozen=True)
class SectionProperties:
    EA: float  # N
    EI: float  # N*m^2

    def __post_init__(self):
        if not (self.EA > 0.0 and self.EI > 0.0):
            raise ValueError("EA and EI must be positive")


class MagnetizationPolicy(enum.Enum):
    ALONG_BODY = "along-body"
    TRANSVERSE_UNIFORM = "transverse-uniform"
    CUSTOM = "custom"


def _outer_diameter(design: RobotDesign, s: float) -> float:
    """Local outer diameter: layer annulus on coated spans, bead/head footprints."""
    d = design.fiber_diameter
    if design.variant.has_layer:
        d = design.fiber_diameter + 2.0 * design.layer_thickness
    if design.variant.has_beads:
        minor = design.bead_geometry.minor_diameter
        for s_b in design.bead_positions():
            if abs(s - s_b) <= minor / 2.0:
                d = max(d, minor)
                break
    if design.variant.has_head and abs(s - design.length) <= design.head_diameter / 2.0:
        d = max(d, design.head_diameter)
    return d


def composite_section_stiffness(design: RobotDesign, s: float) -> SectionProperties:
    """EA/EI at arc position s: stiff fiber core plus soft composite annulus."""
    if not 0.0 <= s <= design.length:
        raise ValueError(f"arc position {s} outside [0, {design.length}]")
    m = design.materials
    d_f = design.fiber_diameter
    d_o = _outer_diameter(design, s)
    EI = m.E_fiber * math.pi * d_f**4 / 64.0 + m.E_composite * math.pi * (d_o**4 - d_f**4) / 64.0
    EA = m.E_fiber * math.pi * d_f**2 / 4.0 + m.E_composite * math.pi * (d_o**2 - d_f**2) / 4.0
    return SectionProperties(EA=EA, EI=EI)


@dataclass(frozen=True)
class DiscreteRod:
    """Node/segment discretization of a design. All arrays are read-only views."""

    design: RobotDesign
    rest_positions: np.ndarray  # (n,3) straight along +x from the origin
    mass: np.ndarray            # (n,) kg
    node_volume: np.ndarray     # (n,) m^3 displaced (for buoyancy)
    drag_radius: np.ndarray     # (n,) m, sphere drag radius (0 = no sphere)
    body_radius: np.ndarray     # (n,) m, contact radius
    node_EI: np.ndarray         # (n,) N*m^2 at node arc positions
    node_vor_l0: np.ndarray     # (n,) m rest Voronoi length
    seg_l0: np.ndarray          # (n-1,) m
    seg_EA: np.ndarray          # (n-1,) N
    seg_drag_diameter: np.ndarray  # (n-1,) m
    bead_node: np.ndarray       # (nb,) int node index per dipole (head included)
    bead_volume: np.ndarray     # (nb,) m^3 magnetic volume
    bead_moment: np.ndarray     # (nb,) A*m^2, zero until magnetized
    bead_dir: np.ndarray        # (nb,3) unit magnetization direction in the rest frame

    def __post_init__(self):
        for name in ("rest_positions", "mass", "node_volume", "drag_radius", "body_radius",
                     "node_EI", "node_vor_l0", "seg_l0", "seg_EA", "seg_drag_diameter",
                     "bead_node", "bead_volume", "bead_moment", "bead_dir"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.rest_positions.shape[0]
        if self.seg_l0.shape[0] != n - 1:
            raise ValueError("node/segment count mismatch")
        if np.any(self.seg_l0 <= 0.0) or np.any(self.seg_EA <= 0.0) or np.any(self.node_EI <= 0.0):
            raise ValueError("rest lengths, EA and EI must all be positive")
        if self.bead_node.size and (self.bead_node.min() < 0 or self.bead_node.max() >= n):
            raise ValueError("bead node index out of range")
        total, expected = float(self.mass.sum()), self.design.total_mass()
        if abs(total - expected) > 1e-6 * expected:
            raise ValueError(f"mass not conserved: nodes sum to {total}, design has {expected}")

    @property
    def n_nodes(self) -> int:
        return self.rest_positions.shape[0]

    @property
    def n_segments(self) -> int:
        return self.seg_l0.shape[0]

    @property
    def length(self) -> float:
        return float(self.seg_l0.sum())

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def rest_tangents(self) -> np.ndarray:
        """Unit tangent per node from adjacent rest edges (central where possible)."""
        x = self.rest_positions
        t = np.empty_like(x)
        t[0] = x[1] - x[0]
        t[-1] = x[-1] - x[-2]
        t[1:-1] = x[2:] - x[:-2]
        return t / np.linalg.norm(t, axis=1)[:, None]


def discretize(design: RobotDesign, target_segment_length: float) -> DiscreteRod:
    """Uniform segments (last absorbs the division remainder); beads snapped to the
    nearest node; a big head becomes the terminal node with augmented mass, its own
    drag radius and dipole. Rest configuration is straight along +x.
    """
    L = design.length
    if not 0.0 < target_segment_length <= L / 10.0:
        raise ResolutionError(
            f"target segment length {target_segment_length} must be in (0, length/10] "
            f"= (0, {L / 10.0:.4g}] so the rod gets at least 10 segments")
    n_seg = int(math.floor(L / target_segment_length + 1e-9))
    seg_l0 = np.full(n_seg, target_segment_length)
    seg_l0[-1] = L - target_segment_length * (n_seg - 1)
    s_nodes = np.concatenate([[0.0], np.cumsum(seg_l0)])
    s_nodes[-1] = L
    n = n_seg + 1

    rest = np.zeros((n, 3))
    rest[:, 0] = s_nodes

    vor = np.zeros(n)
    vor[:-1] += seg_l0 / 2.0
    vor[1:] += seg_l0 / 2.0

    mat = design.materials
    fiber_area = math.pi * design.fiber_diameter**2 / 4.0
    node_volume = fiber_area * vor
    mass = mat.density_fiber * fiber_area * vor
    if design.variant.has_layer:
        d, h = design.fiber_diameter, design.layer_thickness
        layer_area = math.pi * h * (d + h)
        mass = mass + mat.density_composite * layer_area * vor
        node_volume = node_volume + layer_area * vor

    drag_radius = np.zeros(n)
    body_radius = _outer_diameter_profile(design, s_nodes)

    bead_nodes: list[int] = []
    bead_volumes: list[float] = []
    if design.variant.has_layer:
        # the coating is a distributed dipole carrier: one entry per node with the
        # annulus volume of its Voronoi cell (mass already accounted above)
        d, h = design.fiber_diameter, design.layer_thickness
        layer_area = math.pi * h * (d + h)
        for idx in range(n):
            bead_nodes.append(idx)
            bead_volumes.append(layer_area * vor[idx])
    if design.variant.has_beads:
        geom = design.bead_geometry
        for s_b in design.bead_positions():
            idx = int(np.argmin(np.abs(s_nodes - s_b)))
            bead_nodes.append(idx)
            bead_volumes.append(geom.bead_volume)
            mass[idx] += mat.density_composite * geom.bead_volume
            node_volume[idx] += geom.bead_volume
            drag_radius[idx] = max(drag_radius[idx], geom.minor_diameter / 2.0)
    if design.variant.has_head:
        idx = n - 1
        bead_nodes.append(idx)
        bead_volumes.append(design.head_volume)
        mass[idx] += mat.density_composite * design.head_volume
        node_volume[idx] += design.head_volume
        drag_radius[idx] = max(drag_radius[idx], design.head_diameter / 2.0)

    node_EI = np.array([composite_section_stiffness(design, s).EI for s in s_nodes])
    seg_mid = 0.5 * (s_nodes[:-1] + s_nodes[1:])
    seg_EA = np.array([composite_section_stiffness(design, s).EA for s in seg_mid])
    seg_drag_diameter = np.full(n_seg, design.body_outer_diameter)

    nb = len(bead_nodes)
    return DiscreteRod(
        design=design,
        rest_positions=rest,
        mass=mass,
        node_volume=node_volume,
        drag_radius=drag_radius,
        body_radius=np.maximum(body_radius, drag_radius),
        node_EI=node_EI,
        node_vor_l0=vor,
        seg_l0=seg_l0,
        seg_EA=seg_EA,
        seg_drag_diameter=seg_drag_diameter,
        bead_node=np.array(bead_nodes, dtype=np.int64),
        bead_volume=np.array(bead_volumes),
        bead_moment=np.zeros(nb),
        bead_dir=np.tile(np.array([1.0, 0.0, 0.0]), (nb, 1)),
    )


def _outer_diameter_profile(design: RobotDesign, s_nodes: np.ndarray) -> np.ndarray:
    return np.array([_outer_diameter(design, s) for s in s_nodes]) / 2.0


def assign_magnetization(rod: DiscreteRod, remanence: float,
                         policy: MagnetizationPolicy = MagnetizationPolicy.ALONG_BODY,
                         custom_dir=None) -> DiscreteRod:
    """Set bead dipoles m = B_r V / mu0 and their directions per policy.

    ALONG_BODY aligns each dipole with the rest tangent at its node (the direction
    is carried in the body frame and follows the tangent during simulation);
    TRANSVERSE_UNIFORM picks the rest-frame normal closest to +z.
    """
    if not remanence > 0.0:
        raise MagnetizationError(f"remanence must be positive, got {remanence}")
    if rod.bead_node.size and np.any(rod.bead_volume <= 0.0):
        raise MagnetizationError("zero-volume bead cannot be magnetized")
    moments = remanence * rod.bead_volume / MU0

    tangents = rod.rest_tangents()[rod.bead_node] if rod.bead_node.size else np.zeros((0, 3))
    if policy is MagnetizationPolicy.ALONG_BODY:
        dirs = tangents
    elif policy is MagnetizationPolicy.TRANSVERSE_UNIFORM:
        z = np.array([0.0, 0.0, 1.0])
        dirs = np.empty_like(tangents)
        for i, t in enumerate(tangents):
            ref = z if abs(t @ z) < 0.99 else np.array([0.0, 1.0, 0.0])
            d = ref - (ref @ t) * t
            dirs[i] = d / np.linalg.norm(d)
    elif policy is MagnetizationPolicy.CUSTOM:
        if custom_dir is None:
            raise MagnetizationError("custom policy requires a direction")
        d = np.asarray(custom_dir, dtype=float).reshape(3)
        norm = np.linalg.norm(d)
        if not norm > 0.0:
            raise MagnetizationError("custom direction must be nonzero")
        dirs = np.tile(d / norm, (len(tangents), 1))
    else:  # pragma: no cover
        raise MagnetizationError(f"unknown policy {policy}")

    return replace(rod, bead_moment=moments, bead_dir=dirs)
