"""Internal elastic forces of the discrete rod (stretch + bend), the point-load
cantilever oracle, and curvature measurement.

Bending energy lives on interior nodes: E_i = EI_i * kappa_i^2 * lbar_i / 2 with
kappa_i = 2 tan(theta_i / 2) / lbar_i, theta_i the turning angle. lbar_i in the
energy is the rest mean adjacent edge length, so forces are the exact gradient of
a fixed-coefficient function of the node positions. Curvature measurement uses the
current mean edge length. No torsion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EDGE_EPS = 1e-12  # m; below this an edge is degenerate


class DegenerateEdgeError(ValueError):
    """Two adjacent nodes have (numerically) collapsed onto each other."""


@dataclass
class RodState:
    positions: np.ndarray   # (n,3) m
    velocities: np.ndarray  # (n,3) m/s
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.shape[1] != 3:
            raise ValueError("positions and velocities must both be (n,3)")
        if not (np.isfinite(self.positions).all() and np.isfinite(self.velocities).all()):
            raise ValueError("rod state contains non-finite entries")

    def copy(self) -> "RodState":
        return RodState(self.positions.copy(), self.velocities.copy(), self.time)


def _edges(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e = x[1:] - x[:-1]
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths < EDGE_EPS):
        bad = int(np.argmin(lengths))
        raise DegenerateEdgeError(f"edge {bad} collapsed to length {lengths[bad]:.3e} m")
    return e, lengths


def stretch_forces_arrays(x: np.ndarray, seg_l0: np.ndarray, seg_EA: np.ndarray) -> np.ndarray:
    """Axial tension T = EA (|e|/l0 - 1) applied equal/opposite along each edge."""
    e, lengths = _edges(x)
    tension = seg_EA * (lengths / seg_l0 - 1.0)
    f_edge = (tension / lengths)[:, None] * e
    forces = np.zeros_like(x)
    forces[:-1] += f_edge
    forces[1:] -= f_edge
    return forces


def stretch_energy_arrays(x: np.ndarray, seg_l0: np.ndarray, seg_EA: np.ndarray) -> float:
    _, lengths = _edges(x)
    return float(np.sum(0.5 * seg_EA / seg_l0 * (lengths - seg_l0) ** 2))


def curvature_binormals(x: np.ndarray) -> np.ndarray:
    """kb_i = 2 e1 x e2 / (|e1||e2| + e1.e2) at interior nodes; |kb| = 2 tan(theta/2)."""
    e, lengths = _edges(x)
    e1, e2 = e[:-1], e[1:]
    chi = lengths[:-1] * lengths[1:] + np.einsum("ij,ij->i", e1, e2)
    chi = np.maximum(chi, EDGE_EPS * lengths[:-1] * lengths[1:])
    return 2.0 * np.cross(e1, e2) / chi[:, None]


def bend_energy_arrays(x: np.ndarray, node_EI: np.ndarray, node_vor_l0: np.ndarray) -> float:
    kb = curvature_binormals(x)
    kb2 = np.einsum("ij,ij->i", kb, kb)
    return float(np.sum(0.5 * node_EI[1:-1] / node_vor_l0[1:-1] * kb2))


def bend_forces_arrays(x: np.ndarray, node_EI: np.ndarray, node_vor_l0: np.ndarray) -> np.ndarray:
    """Exact negative gradient of the bending energy above."""
    e, lengths = _edges(x)
    e1, e2 = e[:-1], e[1:]
    l1, l2 = lengths[:-1], lengths[1:]
    chi = l1 * l2 + np.einsum("ij,ij->i", e1, e2)
    chi = np.maximum(chi, EDGE_EPS * l1 * l2)
    kb = 2.0 * np.cross(e1, e2) / chi[:, None]

    # w = dE/dkb; gradient of kb contracted with w via the transposed Jacobians
    coef = node_EI[1:-1] / node_vor_l0[1:-1]
    w = coef[:, None] * kb
    kb_dot_w = np.einsum("ij,ij->i", kb, w)
    dchi_de1 = (l2 / l1)[:, None] * e1 + e2
    dchi_de2 = (l1 / l2)[:, None] * e2 + e1
    g_e1 = (2.0 * np.cross(e2, w) - kb_dot_w[:, None] * dchi_de1) / chi[:, None]
    g_e2 = (2.0 * np.cross(w, e1) - kb_dot_w[:, None] * dchi_de2) / chi[:, None]

    forces = np.zeros_like(x)
    np.add.at(forces, np.arange(x.shape[0] - 2), g_e1)
    np.add.at(forces, np.arange(1, x.shape[0] - 1), g_e2 - g_e1)
    np.add.at(forces, np.arange(2, x.shape[0]), -g_e2)
    return forces


def stretching_forces(rod, state: RodState) -> np.ndarray:
    return stretch_forces_arrays(state.positions, rod.seg_l0, rod.seg_EA)


def bending_forces(rod, state: RodState) -> np.ndarray:
    return bend_forces_arrays(state.positions, rod.node_EI, rod.node_vor_l0)


def elastic_energy(rod, state: RodState) -> float:
    return (stretch_energy_arrays(state.positions, rod.seg_l0, rod.seg_EA)
            + bend_energy_arrays(state.positions, rod.node_EI, rod.node_vor_l0))


def cantilever_deflection(force: float, length: float, EI: float) -> float:
    """Point end-load tip deflection of a clamped beam: delta = F L^3 / (3 EI)."""
    if length < 0.0 or EI <= 0.0:
        raise ValueError("length must be >= 0 and EI > 0")
    return force * length**3 / (3.0 * EI)


def node_curvatures(x: np.ndarray) -> np.ndarray:
    """kappa_i = 2 tan(theta_i/2) / lbar_i at interior nodes, current edge lengths."""
    _, lengths = _edges(x)
    kb = curvature_binormals(x)
    lbar = 0.5 * (lengths[:-1] + lengths[1:])
    return np.linalg.norm(kb, axis=1) / lbar


def max_curvature(state_or_positions) -> float:
    """Largest interior-node curvature (1/m); zero for straight rods."""
    x = state_or_positions.positions if isinstance(state_or_positions, RodState) else np.asarray(state_or_positions, float)
    if x.shape[0] < 3:
        raise ValueError("curvature needs at least 3 nodes")
    return float(np.max(node_curvatures(x)))
