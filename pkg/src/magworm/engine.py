"""World assembly, time integration and trajectory recording.

Semi-implicit Euler with the local drag operator folded into the velocity update:
(m I + dt*Gamma) v' = m v + dt (F + Gamma U),  x' = x + dt v'. Deterministic:
fixed iteration order, no clocks, no randomness; identical reruns give
bit-identical trajectories.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from magworm import kernels
from magworm.environment import Scene, ambient_flow, contact_force, sdf_eval
from magworm.hydro import rft_coefficients
from magworm.magnetics import MagnetSource, dipole_field, dipole_field_gradient
from magworm.mechanics import (RodState, bend_forces_arrays, bend_energy_arrays,
                               node_curvatures, stretch_energy_arrays,
                               stretch_forces_arrays)
from magworm.robot import DiscreteRod

_FORCE_TERMS = {2: "magnetic/drag/contact force", 3: "velocity blowup"}


class SimulationError(RuntimeError):
    def __init__(self, msg: str, step: int | None = None, time: float | None = None):
        if step is not None:
            msg = f"{msg} (step {step}, t={time:.6g} s)"
        super().__init__(msg)
        self.step = step
        self.time = time


@dataclass
class SimConfig:
    dt: float | None = None          # None -> stability_dt at build
    damping_extra: float = 0.0       # 1/s, purely numerical
    gravity_on: bool = True
    buoyancy_on: bool = True
    self_contact: bool | None = None  # None -> scene default
    record_stride: int = 1000

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass(frozen=True)
class ClampSpec:
    """Fix node 0 and restrain the first edge toward `direction` (cantilever root)."""
    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if not n > 0.0:
            raise ValueError("clamp direction must be nonzero")
        object.__setattr__(self, "direction", d / n)


GRAVITY = np.array([0.0, 0.0, -9.81])


def _min_rotation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation matrix taking unit vector a to unit vector b (minimal twist)."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    c = float(a @ b)
    if c < -1.0 + 1e-12:
        # pick any perpendicular axis for the half-turn
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    v = np.cross(a, b)
    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


@dataclass
class World:
    rod: DiscreteRod
    scene: Scene
    magnet: MagnetSource | None
    config: SimConfig
    clamp: ClampSpec | None = None
    start_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    start_dir: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    external_force: np.ndarray | None = None  # (n,3) constant per-node force
    initial_state: RodState | None = None
    rest_tan_world: np.ndarray | None = None
    bead_dir_world: np.ndarray | None = None
    cargo_x0: np.ndarray | None = None
    cargo_v0: np.ndarray | None = None

    def __post_init__(self):
        self.start_position = np.asarray(self.start_position, dtype=float).reshape(3)
        d = np.asarray(self.start_dir, dtype=float).reshape(3)
        self.start_dir = d / np.linalg.norm(d)
        R = _min_rotation(np.array([1.0, 0.0, 0.0]), self.start_dir)
        positions = self.rod.rest_positions @ R.T + self.start_position
        self.initial_state = RodState(positions, np.zeros_like(positions), 0.0)
        self.rest_tan_world = np.ascontiguousarray(self.rod.rest_tangents() @ R.T)
        self.bead_dir_world = np.ascontiguousarray(self.rod.bead_dir @ R.T)
        if self.config.self_contact is None:
            self.config = replace(self.config, self_contact=self.scene.self_contact)
        if self.external_force is None:
            self.external_force = np.zeros_like(positions)
        else:
            self.external_force = np.ascontiguousarray(self.external_force, dtype=float)
            if self.external_force.shape != positions.shape:
                raise ValueError("external_force must be (n_nodes, 3)")
        cargo = self.scene.cargo
        self.cargo_x0 = np.array([c.position for c in cargo]).reshape(len(cargo), 3)
        self.cargo_v0 = np.array([c.velocity for c in cargo]).reshape(len(cargo), 3)
        if self.config.dt is None:
            self.config = replace(self.config, dt=stability_dt(self))
        else:
            limit = stability_dt(self)
            if self.config.dt > limit * 1.0000001:
                raise ValueError(
                    f"dt={self.config.dt:.6g} s exceeds the stability limit "
                    f"{limit:.6g} s for this world")

    # drag coefficients for the rod body in this scene's fluid
    @property
    def drag_coefficients(self) -> tuple[float, float]:
        mu = self.scene.fluid.dynamic_viscosity
        return rft_coefficients(mu, self.rod.length, self.rod.design.body_outer_diameter)

    def fixed_mask(self) -> np.ndarray:
        mask = np.zeros(self.rod.n_nodes, dtype=np.uint8)
        if self.clamp is not None:
            mask[0] = 1
        return mask

    def kernel_args(self, state: RodState, cargo_x: np.ndarray, cargo_v: np.ndarray,
                    hints: np.ndarray, normal_cache: np.ndarray | None = None) -> dict:
        if normal_cache is None:
            normal_cache = np.full((self.rod.n_nodes + len(self.scene.cargo), 3), np.nan)
        rod, scene = self.rod, self.scene
        ct, cn = self.drag_coefficients
        clamp_on = 1 if self.clamp is not None else 0
        clamp_dir = (self.clamp.direction if self.clamp is not None
                     else np.array([1.0, 0.0, 0.0]))
        return dict(
            x=state.positions, v=state.velocities, fixed=self.fixed_mask(),
            mass=rod.mass, node_vol=rod.node_volume,
            seg_l0=rod.seg_l0, seg_EA=rod.seg_EA,
            node_EI=rod.node_EI, node_vor=rod.node_vor_l0,
            clamp_on=clamp_on, clamp_dir=np.ascontiguousarray(clamp_dir),
            clamp_EI=float(rod.node_EI[0]), clamp_vor=float(rod.seg_l0[0] / 2.0),
            bead_node=rod.bead_node, bead_m=rod.bead_moment,
            bead_dir=self.bead_dir_world, rest_tan=self.rest_tan_world,
            ct=ct, cn=cn, drag_r=rod.drag_radius, body_r=rod.body_radius,
            mu_visc=scene.fluid.dynamic_viscosity,
            ext_f=self.external_force,
            grav=GRAVITY, rho_f=scene.fluid.density,
            gravity_on=1 if self.config.gravity_on else 0,
            buoyancy_on=1 if self.config.buoyancy_on else 0,
            k_c=scene.contact_stiffness, mu_f=scene.friction_coeff,
            self_contact=1 if self.config.self_contact else 0,
            prim_kind=scene.prim_kind, prim_params=scene.prim_params,
            poly_pts=scene.poly_pts, poly_off=scene.poly_off,
            program=scene.program, hints=hints, normal_cache=normal_cache,
            flow_kind=scene.flow_kind, flow_params=scene.flow_params,
            flow_poly=scene.flow_poly,
            magnet_on=1 if self.magnet is not None else 0,
            mag_moment=self.magnet.dipole_moment if self.magnet is not None else 0.0,
            mag_rmin=(max(self.magnet.radius, self.magnet.height / 2.0)
                      if self.magnet is not None else 0.0),
            cargo_x=cargo_x, cargo_v=cargo_v,
            cargo_r=np.array([c.radius for c in scene.cargo]),
            cargo_m=np.array([c.mass for c in scene.cargo]),
            cargo_pinned=1 if scene.cargo_plane_z is not None else 0,
            cargo_plane_z=scene.cargo_plane_z if scene.cargo_plane_z is not None else 0.0,
            dt=self.config.dt, damping_extra=self.config.damping_extra,
        )

    def fresh_hints(self) -> np.ndarray:
        rows = self.rod.n_nodes + len(self.scene.cargo) + 1
        return np.full((rows, max(1, self.scene.prim_kind.shape[0])), -1, dtype=np.int64)

    def elastic_energy(self, state: RodState) -> float:
        e = stretch_energy_arrays(state.positions, self.rod.seg_l0, self.rod.seg_EA)
        e += bend_energy_arrays(state.positions, self.rod.node_EI, self.rod.node_vor_l0)
        return e

    def kinetic_energy(self, state: RodState) -> float:
        return float(0.5 * np.sum(self.rod.mass[:, None] * state.velocities**2))


# ---------------------------------------------------------------------------
# controllers: queried once per step for the magnet pose

@dataclass
class StaticPose:
    position: np.ndarray
    axis: np.ndarray

    def pose_arrays(self, step0: int, count: int, dt: float):
        pos = np.tile(np.asarray(self.position, float), (count, 1))
        axis = np.tile(_unit(self.axis), (count, 1))
        return pos, axis


@dataclass
class ScriptedPath:
    """Time-parameterized waypoints, linearly interpolated, ends held."""
    times: np.ndarray
    positions: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.axes = np.asarray(self.axes, dtype=float)
        if not (len(self.times) == len(self.positions) == len(self.axes)) or len(self.times) == 0:
            raise ValueError("waypoint arrays must be equal nonzero length")
        if np.any(np.diff(self.times) < 0.0):
            raise ValueError("waypoint times must be non-decreasing")

    def pose_arrays(self, step0: int, count: int, dt: float):
        t = (step0 + np.arange(count)) * dt
        pos = np.stack([np.interp(t, self.times, self.positions[:, k]) for k in range(3)], axis=1)
        axis = np.stack([np.interp(t, self.times, self.axes[:, k]) for k in range(3)], axis=1)
        norms = np.linalg.norm(axis, axis=1)
        norms[norms == 0.0] = 1.0
        return pos, axis / norms[:, None]


@dataclass
class RotatingField:
    """Fixed position; moment axis spins about spin_axis at omega (rad/s)."""
    position: np.ndarray
    axis0: np.ndarray
    spin_axis: np.ndarray
    omega: float

    def pose_arrays(self, step0: int, count: int, dt: float):
        t = (step0 + np.arange(count)) * dt
        p = np.tile(np.asarray(self.position, float), (count, 1))
        a0 = _unit(self.axis0)
        s = _unit(self.spin_axis)
        a_par = (a0 @ s) * s
        a_perp = a0 - a_par
        b = np.cross(s, a_perp)
        ang = self.omega * t
        axis = (a_perp[None, :] * np.cos(ang)[:, None]
                + b[None, :] * np.sin(ang)[:, None] + a_par[None, :])
        norms = np.linalg.norm(axis, axis=1)
        norms[norms == 0.0] = 1.0
        return p, axis / norms[:, None]


@dataclass
class ExternalController:
    """Command-queue driven pose: piecewise constant between (step, pos, axis) commands."""
    initial_position: np.ndarray
    initial_axis: np.ndarray
    commands: list = field(default_factory=list)  # [(step, pos(3,), axis(3,)), ...] sorted

    def pose_arrays(self, step0: int, count: int, dt: float):
        pos = np.empty((count, 3))
        axis = np.empty((count, 3))
        cur_p = np.asarray(self.initial_position, dtype=float).copy()
        cur_a = _unit(self.initial_axis)
        idx = 0
        cmds = self.commands
        # advance through commands at or before step0
        while idx < len(cmds) and cmds[idx][0] <= step0:
            cur_p = np.asarray(cmds[idx][1], dtype=float)
            cur_a = _unit(cmds[idx][2])
            idx += 1
        for k in range(count):
            g = step0 + k
            while idx < len(cmds) and cmds[idx][0] <= g:
                cur_p = np.asarray(cmds[idx][1], dtype=float)
                cur_a = _unit(cmds[idx][2])
                idx += 1
            pos[k] = cur_p
            axis[k] = cur_a
        return pos, axis


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not n > 0.0:
        raise ValueError("zero-length direction")
    return v / n


# ---------------------------------------------------------------------------

def update_frame_hash(h, t: float, x: np.ndarray, magnet_pos: np.ndarray,
                      magnet_axis: np.ndarray, cargo_x: np.ndarray) -> None:
    """One frame's contribution to the canonical trajectory hash."""
    h.update(np.array([t], dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(x).astype("<f8").tobytes())
    h.update(np.ascontiguousarray(magnet_pos).astype("<f8").tobytes())
    h.update(np.ascontiguousarray(magnet_axis).astype("<f8").tobytes())
    h.update(np.ascontiguousarray(cargo_x).astype("<f8").tobytes())


@dataclass
class Trajectory:
    t: np.ndarray          # (K,)
    x: np.ndarray          # (K,n,3)
    v: np.ndarray          # (K,n,3)
    magnet_pos: np.ndarray  # (K,3)
    magnet_axis: np.ndarray
    cargo_x: np.ndarray    # (K,m,3)
    cargo_v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0.0) and len(self.t) > 1:
            raise ValueError("frame timestamps must be strictly increasing")

    @property
    def n_frames(self) -> int:
        return len(self.t)

    def kappa_max(self) -> np.ndarray:
        return np.array([float(np.max(node_curvatures(xf))) for xf in self.x])

    def head_speed(self) -> np.ndarray:
        return np.linalg.norm(self.v[:, -1, :], axis=1)

    def head_magnet_gap(self) -> np.ndarray:
        return np.linalg.norm(self.x[:, -1, :] - self.magnet_pos, axis=1)

    def hash_hex(self) -> str:
        """SHA-256 over the canonical little-endian float64 stream of all frames:
        t, node positions, magnet pose, cargo positions."""
        h = hashlib.sha256()
        for k in range(self.n_frames):
            update_frame_hash(h, self.t[k], self.x[k], self.magnet_pos[k],
                              self.magnet_axis[k], self.cargo_x[k])
        return h.hexdigest()

    def to_csv(self, out_dir) -> list:
        """trajectory.csv (one row per frame per node), metrics.csv, cargo.csv."""
        import os
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        n = self.x.shape[1]
        path = os.path.join(out_dir, "trajectory.csv")
        with open(path, "w") as fh:
            fh.write("frame,t_s,node,x_m,y_m,z_m,vx_m_per_s,vy_m_per_s,vz_m_per_s\n")
            for k in range(self.n_frames):
                for i in range(n):
                    fh.write(f"{k},{self.t[k]!r},{i},"
                             f"{self.x[k, i, 0]!r},{self.x[k, i, 1]!r},{self.x[k, i, 2]!r},"
                             f"{self.v[k, i, 0]!r},{self.v[k, i, 1]!r},{self.v[k, i, 2]!r}\n")
        paths.append(path)
        kappas = self.kappa_max()
        speeds = self.head_speed()
        gaps = self.head_magnet_gap()
        path = os.path.join(out_dir, "metrics.csv")
        with open(path, "w") as fh:
            fh.write("frame,t_s,kappa_max_per_m,head_speed_m_per_s,head_magnet_gap_m\n")
            for k in range(self.n_frames):
                fh.write(f"{k},{self.t[k]!r},{kappas[k]!r},{speeds[k]!r},{gaps[k]!r}\n")
        paths.append(path)
        if self.cargo_x.shape[1]:
            path = os.path.join(out_dir, "cargo.csv")
            with open(path, "w") as fh:
                fh.write("frame,t_s,cargo,x_m,y_m,z_m,vx_m_per_s,vy_m_per_s,vz_m_per_s\n")
                for k in range(self.n_frames):
                    for c in range(self.cargo_x.shape[1]):
                        fh.write(f"{k},{self.t[k]!r},{c},"
                                 f"{self.cargo_x[k, c, 0]!r},{self.cargo_x[k, c, 1]!r},"
                                 f"{self.cargo_x[k, c, 2]!r},{self.cargo_v[k, c, 0]!r},"
                                 f"{self.cargo_v[k, c, 1]!r},{self.cargo_v[k, c, 2]!r}\n")
            paths.append(path)
        return paths


def stability_dt(world: World) -> float:
    """0.5 sqrt(m_min / k_max) over axial, bending and contact stiffness, then
    verified by a 1000-step probe on the rest state (halved until it passes)."""
    rod = world.rod
    k_axial = float(np.max(rod.seg_EA / rod.seg_l0))
    k_bend = float(np.max(3.0 * rod.node_EI / rod.node_vor_l0**3))
    k_contact = world.scene.contact_stiffness
    k_max = max(k_axial, k_bend, k_contact)
    movable = rod.mass if world.clamp is None else rod.mass[1:]
    m_min = float(np.min(movable))
    dt = 0.5 * math.sqrt(m_min / k_max)
    for _ in range(12):
        if _probe_stable(world, dt):
            return dt
        dt /= 2.0
    raise SimulationError("no stable dt found within 12 halvings")


def _probe_stable(world: World, dt: float, steps: int = 1000) -> bool:
    state = world.initial_state.copy()
    cargo_x = world.cargo_x0.copy()
    cargo_v = world.cargo_v0.copy()
    hints = world.fresh_hints()
    args = world.kernel_args(state, cargo_x, cargo_v, hints)
    args["dt"] = dt
    if world.magnet is not None:
        pos = np.tile(world.magnet.position, (steps, 1))
        axis = np.tile(world.magnet.moment_axis, (steps, 1))
    else:
        pos = np.zeros((steps, 3))
        axis = np.tile(np.array([0.0, 0.0, 1.0]), (steps, 1))
    zero3 = np.zeros((1, 3))
    zeroc = np.zeros((1, cargo_x.shape[0], 3))
    status, _, _ = kernels.simulate_batch(
        **args, step0=0, n_steps=steps, record_stride=0,
        mag_pos=pos, mag_axis=axis,
        out_t=np.zeros(1), out_x=np.zeros((1, rod_n(world), 3)),
        out_v=np.zeros((1, rod_n(world), 3)), out_magpos=zero3, out_magaxis=zero3,
        out_cx=zeroc, out_cv=zeroc, rec_start=0)
    return status == 0


def rod_n(world: World) -> int:
    return world.rod.n_nodes


def step(world: World, state: RodState, dt: float | None = None) -> RodState:
    """Advance one step with the magnet held at its configured pose."""
    dt = world.config.dt if dt is None else dt
    if dt > world.config.dt * 1.0000001:
        raise ValueError(f"step dt {dt} exceeds configured dt {world.config.dt}")
    out = state.copy()
    cargo_x = world.cargo_x0.copy()
    cargo_v = world.cargo_v0.copy()
    hints = world.fresh_hints()
    args = world.kernel_args(out, cargo_x, cargo_v, hints)
    args["dt"] = dt
    if world.magnet is not None:
        pos = world.magnet.position[None, :]
        axis = world.magnet.moment_axis[None, :]
    else:
        pos = np.zeros((1, 3))
        axis = np.array([[0.0, 0.0, 1.0]])
    zero3 = np.zeros((1, 3))
    zeroc = np.zeros((1, cargo_x.shape[0], 3))
    status, info, _ = kernels.simulate_batch(
        **args, step0=0, n_steps=1, record_stride=0,
        mag_pos=pos, mag_axis=axis,
        out_t=np.zeros(1), out_x=np.zeros((1, world.rod.n_nodes, 3)),
        out_v=np.zeros((1, world.rod.n_nodes, 3)), out_magpos=zero3, out_magaxis=zero3,
        out_cx=zeroc, out_cv=zeroc, rec_start=0)
    _raise_on_status(status, info, dt)
    out.time = state.time + dt
    return out


def _raise_on_status(status: int, step_idx: int, dt: float):
    if status == 0:
        return
    t = step_idx * dt
    if status == 1:
        raise SimulationError("degenerate edge (adjacent nodes collapsed)", step_idx, t)
    if status == 2:
        raise SimulationError("non-finite force or velocity encountered", step_idx, t)
    if status == 3:
        raise SimulationError(f"instability detected: |v| > {kernels.VEL_LIMIT} m/s", step_idx, t)
    raise SimulationError(f"unknown status {status}", step_idx, t)


BATCH_STEPS = 65536


@dataclass
class RunState:
    """Mutable bundle carried across chunked runs (positions, cargo, SDF hints,
    cached contact normals)."""
    rod_state: RodState
    cargo_x: np.ndarray
    cargo_v: np.ndarray
    hints: np.ndarray
    normal_cache: np.ndarray
    steps_done: int = 0

    def copy(self) -> "RunState":
        return RunState(self.rod_state.copy(), self.cargo_x.copy(),
                        self.cargo_v.copy(), self.hints.copy(),
                        self.normal_cache.copy(), self.steps_done)


def fresh_run_state(world: World) -> RunState:
    rows = world.rod.n_nodes + len(world.scene.cargo)
    return RunState(world.initial_state.copy(), world.cargo_x0.copy(),
                    world.cargo_v0.copy(), world.fresh_hints(),
                    np.full((rows, 3), np.nan), 0)


def run(world: World, controller, duration: float,
        record_stride: int | None = None,
        start: RunState | None = None) -> Trajectory:
    """Integrate for `duration` seconds, recording every record_stride steps plus
    the initial and final frames. Deterministic for a given (world, controller,
    start): identical reruns give bit-identical trajectories."""
    if duration < 0.0:
        raise ValueError("duration must be >= 0")
    dt = world.config.dt
    stride = record_stride if record_stride is not None else world.config.record_stride
    steps = int(math.ceil(duration / dt - 1e-12)) if duration > 0.0 else 0
    if controller is None:
        if world.magnet is not None:
            controller = StaticPose(world.magnet.position, world.magnet.moment_axis)
        else:
            controller = StaticPose(np.zeros(3), np.array([0.0, 0.0, 1.0]))

    rs = (start or fresh_run_state(world)).copy()
    state = rs.rod_state
    cargo_x, cargo_v, hints = rs.cargo_x, rs.cargo_v, rs.hints
    base = rs.steps_done
    n = world.rod.n_nodes
    m = cargo_x.shape[0]

    n_on_grid = (base + steps) // stride - base // stride
    k_frames = 1 + n_on_grid + (1 if (base + steps) % stride else 0)
    out_t = np.zeros(k_frames)
    out_x = np.zeros((k_frames, n, 3))
    out_v = np.zeros((k_frames, n, 3))
    out_magpos = np.zeros((k_frames, 3))
    out_magaxis = np.zeros((k_frames, 3))
    out_cx = np.zeros((k_frames, m, 3))
    out_cv = np.zeros((k_frames, m, 3))

    # initial frame
    pos0, axis0 = controller.pose_arrays(base, 1, dt)
    out_t[0] = base * dt
    out_x[0] = state.positions
    out_v[0] = state.velocities
    out_magpos[0] = pos0[0]
    out_magaxis[0] = axis0[0]
    out_cx[0] = cargo_x
    out_cv[0] = cargo_v

    args = world.kernel_args(state, cargo_x, cargo_v, hints, rs.normal_cache)
    rec = 1
    done = 0
    while done < steps:
        count = min(BATCH_STEPS, steps - done)
        pos, axis = controller.pose_arrays(base + done, count, dt)
        status, info, rec = kernels.simulate_batch(
            **args, step0=base + done, n_steps=count, record_stride=stride,
            mag_pos=np.ascontiguousarray(pos), mag_axis=np.ascontiguousarray(axis),
            out_t=out_t, out_x=out_x, out_v=out_v,
            out_magpos=out_magpos, out_magaxis=out_magaxis,
            out_cx=out_cx, out_cv=out_cv, rec_start=rec)
        _raise_on_status(status, info - base, dt)
        done += count

    if (base + steps) % stride and steps > 0:
        # final frame not on the stride grid
        pos, axis = controller.pose_arrays(base + steps - 1, 1, dt)
        out_t[rec] = (base + steps) * dt
        out_x[rec] = state.positions
        out_v[rec] = state.velocities
        out_magpos[rec] = pos[0]
        out_magaxis[rec] = axis[0]
        out_cx[rec] = cargo_x
        out_cv[rec] = cargo_v
        rec += 1

    state.time = (base + steps) * dt
    rs.steps_done = base + steps
    traj = Trajectory(
        t=out_t[:rec], x=out_x[:rec], v=out_v[:rec],
        magnet_pos=out_magpos[:rec], magnet_axis=out_magaxis[:rec],
        cargo_x=out_cx[:rec], cargo_v=out_cv[:rec],
        meta={"dt": dt, "steps": steps, "record_stride": stride,
              "design": world.rod.design.name, "scene": world.scene.name})
    traj.meta["final_run_state"] = rs
    return traj


def run_to_equilibrium(world: World, controller=None, v_tol: float = 2e-6,
                       max_duration: float = 5.0, chunk: float = 0.05,
                       start: RunState | None = None) -> tuple[RunState, bool]:
    """Advance in chunks until the rod's peak speed falls below v_tol (m/s).
    Returns (final run state, converged flag)."""
    rs = (start or fresh_run_state(world)).copy()
    elapsed = 0.0
    while elapsed < max_duration:
        span = min(chunk, max_duration - elapsed)
        steps_in_chunk = max(1, int(math.ceil(span / world.config.dt - 1e-12)))
        traj = run(world, controller, span, record_stride=steps_in_chunk, start=rs)
        rs = traj.meta["final_run_state"]
        elapsed += span
        if float(np.abs(traj.v[-1]).max()) < v_tol:
            return rs, True
    return rs, False


# ---------------------------------------------------------------------------
# readable reference force assembly (diagnostics / tests); the kernel is the fast path

def assemble_forces(world: World, state: RodState) -> tuple[np.ndarray, np.ndarray]:
    """Total per-node force (and per-cargo force) with per-term NaN diagnostics."""
    rod = world.rod
    x, v = state.positions, state.velocities
    total = np.zeros_like(x)

    terms: dict[str, np.ndarray] = {}
    terms["stretch"] = stretch_forces_arrays(x, rod.seg_l0, rod.seg_EA)
    terms["bend"] = bend_forces_arrays(x, rod.node_EI, rod.node_vor_l0)
    if world.clamp is not None:
        terms["clamp"] = _clamp_force(world, x)
    if world.magnet is not None and rod.bead_node.size:
        terms["magnetic"] = _magnetic_forces(world, x)
    if world.config.gravity_on:
        buoy = world.scene.fluid.density * rod.node_volume if world.config.buoyancy_on else 0.0
        terms["gravity"] = (rod.mass - buoy)[:, None] * GRAVITY[None, :]
    if np.any(world.external_force):
        terms["external"] = world.external_force
    terms["drag"] = _drag_forces(world, x, v)
    terms["contact"] = _contact_forces(world, x, v)

    for name, term in terms.items():
        if not np.isfinite(term).all():
            raise SimulationError(f"non-finite {name} force term")
        total += term

    cargo_f = np.zeros((world.cargo_x0.shape[0], 3))
    return total, cargo_f


def _clamp_force(world: World, x: np.ndarray) -> np.ndarray:
    rod = world.rod
    l0 = rod.seg_l0[0]
    e1 = world.clamp.direction * l0
    e2 = x[1] - x[0]
    l2 = float(np.linalg.norm(e2))
    chi = max(l0 * l2 + float(e1 @ e2), 1e-12 * l0 * l2)
    kb = 2.0 * np.cross(e1, e2) / chi
    coef = rod.node_EI[0] / (l0 / 2.0)
    w = coef * kb
    d2 = (l0 / l2) * e2 + e1
    g2 = (2.0 * np.cross(w, e1) - float(kb @ w) * d2) / chi
    out = np.zeros_like(x)
    out[0] = g2
    out[1] = -g2
    return out


def _magnetic_forces(world: World, x: np.ndarray) -> np.ndarray:
    rod = world.rod
    out = np.zeros_like(x)
    n = rod.n_nodes
    rmin = max(world.magnet.radius, world.magnet.height / 2.0)
    for bi, i in enumerate(rod.bead_node):
        ia, ib = (i - 1 if i > 0 else 0), (i + 1 if i < n - 1 else n - 1)
        t = x[ib] - x[ia]
        t = t / np.linalg.norm(t)
        R = _min_rotation(world.rest_tan_world[i], t)
        m_vec = rod.bead_moment[bi] * (R @ world.bead_dir_world[bi])
        rel = x[i] - world.magnet.position
        dist = float(np.linalg.norm(rel))
        eval_at = (world.magnet.position + rel * (rmin / dist)
                   if dist < rmin else x[i])
        B = dipole_field(world.magnet, eval_at)
        G = dipole_field_gradient(world.magnet, eval_at)
        out[i] += G.T @ m_vec
        if i == 0 or i == n - 1:
            continue  # terminal dipoles (the head) are force-only, matching the kernel
        tau = np.cross(m_vec, B)
        d = x[ib] - x[ia]
        fc = np.cross(tau, d) / float(d @ d)
        out[ib] += fc
        out[ia] -= fc
    return out


def _drag_forces(world: World, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    rod = world.rod
    ct, cn = world.drag_coefficients
    mu = world.scene.fluid.dynamic_viscosity
    out = np.zeros_like(x)
    e = x[1:] - x[:-1]
    el = np.linalg.norm(e, axis=1)
    that = e / el[:, None]
    for j in range(rod.n_segments):
        G = 0.5 * rod.seg_l0[j] * (cn * np.eye(3) + (ct - cn) * np.outer(that[j], that[j]))
        for node in (j, j + 1):
            u = ambient_flow(world.scene, x[node])
            out[node] += -G @ (v[node] - u)
    for i in range(rod.n_nodes):
        if rod.drag_radius[i] > 0.0:
            u = ambient_flow(world.scene, x[i])
            out[i] += -6.0 * math.pi * mu * rod.drag_radius[i] * (v[i] - u)
    return out


def _contact_forces(world: World, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    scene = world.scene
    for i in range(x.shape[0]):
        d, normal = sdf_eval(scene, x[i])
        out[i] += contact_force(d, normal, v[i], world.rod.body_radius[i],
                                scene.contact_stiffness, scene.friction_coeff)
    return out
