"""Signed-distance scenes, penalty contact, ambient flow, cargo bodies.

Convention: sdf(p) > 0 inside the fluid lumen, 0 on the wall; the normal is the
normalized central-difference gradient (step 1e-6 m) and points into the lumen.
Scenes are flat CSG programs over distance primitives evaluated in postfix order:
token >= 0 pushes primitive #token, -1 = union (max), -2 = intersection (min),
-3 = complement (negate).
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, field

import numpy as np

from magworm.hydro import FLUID_PRESETS, Fluid

# primitive kind codes (shared with the compiled kernels)
PRIM_CAPSULE_POLYLINE = 0   # params[0] = radius; polyline in poly_pts[off:off+cnt]
PRIM_SPHERE = 1             # params = cx, cy, cz, R
PRIM_BOX = 2                # params = cx, cy, cz, hx, hy, hz  (interior distance)
PRIM_SLAB = 3               # params = axis, lo, hi            (solid interior +)
PRIM_TUBE = 4               # params = px, py, pz, dx, dy, dz, R (infinite cylinder lumen)

OP_UNION = -1
OP_INTERSECT = -2
OP_COMPLEMENT = -3

FLOW_NONE = 0
FLOW_UNIFORM = 1      # params = Ux, Uy, Uz
FLOW_POISEUILLE = 2   # params = u_max, channel_radius; axis polyline = flow_poly prim

NORMAL_STEP = 1e-6  # m, central-difference step for sdf normals


class SceneError(ValueError):
    """Unknown scene name or malformed scene spec."""


@dataclass
class CargoBody:
    radius: float  # m
    mass: float    # kg
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        if not (self.radius > 0.0 and self.mass > 0.0):
            raise ValueError("cargo radius and mass must be positive")
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)


@dataclass(frozen=True)
class Scene:
    name: str
    prim_kind: np.ndarray     # (P,) int64
    prim_params: np.ndarray   # (P,8) float64
    poly_pts: np.ndarray      # (Q,3) float64
    poly_off: np.ndarray      # (P,2) int64 start/count into poly_pts
    program: np.ndarray       # (T,) int64 postfix tokens
    fluid: Fluid
    friction_coeff: float = 0.3
    contact_stiffness: float = 10.0   # N/m per m of penetration
    self_contact: bool = False
    flow_kind: int = FLOW_NONE
    flow_params: np.ndarray = field(default_factory=lambda: np.zeros(8))
    flow_poly: int = -1
    cargo: tuple[CargoBody, ...] = ()
    cargo_plane_z: float | None = None   # pinned-to-plane 2D cargo mode
    robot_start: np.ndarray = field(default_factory=lambda: np.zeros(3))
    robot_dir: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    outline: tuple[np.ndarray, ...] = ()  # xy polylines for plots / the UI
    regions: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if self.friction_coeff < 0.0 or not self.contact_stiffness > 0.0:
            raise ValueError("need friction_coeff >= 0 and contact_stiffness > 0")
        for name in ("prim_kind", "prim_params", "poly_pts", "poly_off", "program",
                     "flow_params", "robot_start", "robot_dir"):
            arr = np.ascontiguousarray(getattr(self, name))
            object.__setattr__(self, name, arr)

    def with_fluid(self, fluid: Fluid) -> "Scene":
        from dataclasses import replace
        return replace(self, fluid=fluid)


# ---------------------------------------------------------------------------
# reference (numpy) SDF evaluation; the hot path lives in magworm.kernels

def _dist_to_polyline(p: np.ndarray, pts: np.ndarray) -> float:
    best = math.inf
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(p - (a + t * ab))))
    return best


def _prim_value(scene: Scene, idx: int, p: np.ndarray) -> float:
    kind = int(scene.prim_kind[idx])
    q = scene.prim_params[idx]
    if kind == PRIM_CAPSULE_POLYLINE:
        start, count = scene.poly_off[idx]
        return q[0] - _dist_to_polyline(p, scene.poly_pts[start:start + count])
    if kind == PRIM_SPHERE:
        return q[3] - float(np.linalg.norm(p - q[:3]))
    if kind == PRIM_BOX:
        d = q[3:6] - np.abs(p - q[:3])
        return float(d.min())
    if kind == PRIM_SLAB:
        a = int(q[0])
        return float(min(p[a] - q[1], q[2] - p[a]))
    if kind == PRIM_TUBE:
        axis = q[3:6] / np.linalg.norm(q[3:6])
        rel = p - q[:3]
        radial = rel - (rel @ axis) * axis
        return q[6] - float(np.linalg.norm(radial))
    raise SceneError(f"unknown primitive kind {kind}")


def sdf_value(scene: Scene, p) -> float:
    """Signed distance to the wall, positive inside the lumen."""
    p = np.asarray(p, dtype=float).reshape(3)
    stack: list[float] = []
    for tok in scene.program:
        tok = int(tok)
        if tok >= 0:
            stack.append(_prim_value(scene, tok, p))
        elif tok == OP_UNION:
            b, a = stack.pop(), stack.pop()
            stack.append(max(a, b))
        elif tok == OP_INTERSECT:
            b, a = stack.pop(), stack.pop()
            stack.append(min(a, b))
        elif tok == OP_COMPLEMENT:
            stack.append(-stack.pop())
        else:
            raise SceneError(f"bad program token {tok}")
    if len(stack) != 1:
        raise SceneError("scene program does not reduce to a single value")
    return stack[0]


def sdf_eval(scene: Scene, p) -> tuple[float, np.ndarray]:
    """Distance and inward-pointing unit normal at p."""
    p = np.asarray(p, dtype=float).reshape(3)
    d = sdf_value(scene, p)
    grad = np.zeros(3)
    for k in range(3):
        dp = np.zeros(3)
        dp[k] = NORMAL_STEP
        grad[k] = (sdf_value(scene, p + dp) - sdf_value(scene, p - dp)) / (2.0 * NORMAL_STEP)
    norm = np.linalg.norm(grad)
    normal = grad / norm if norm > 0.0 else np.array([0.0, 0.0, 1.0])
    return d, normal


def contact_force(distance: float, normal: np.ndarray, velocity: np.ndarray,
                  body_radius: float, contact_stiffness: float,
                  friction_coeff: float) -> np.ndarray:
    """Penalty normal force plus regularized Coulomb friction; zero out of contact."""
    pen = body_radius - distance
    if pen <= 0.0:
        return np.zeros(3)
    n = np.asarray(normal, dtype=float).reshape(3)
    v = np.asarray(velocity, dtype=float).reshape(3)
    f_n = contact_stiffness * pen * n
    v_t = v - (v @ n) * n
    speed_t = float(np.linalg.norm(v_t))
    c_stick = contact_stiffness * 1e-3  # N*s/m: viscous cap regularizing stick
    if speed_t > 0.0:
        f_t = -min(friction_coeff * float(np.linalg.norm(f_n)), c_stick * speed_t) * (v_t / speed_t)
    else:
        f_t = np.zeros(3)
    return f_n + f_t


def ambient_flow(scene: Scene, p) -> np.ndarray:
    """Background fluid velocity at p (zero by default)."""
    p = np.asarray(p, dtype=float).reshape(3)
    if scene.flow_kind == FLOW_NONE:
        return np.zeros(3)
    if scene.flow_kind == FLOW_UNIFORM:
        return scene.flow_params[:3].copy()
    if scene.flow_kind == FLOW_POISEUILLE:
        u_max, r_ch = scene.flow_params[0], scene.flow_params[1]
        start, count = scene.poly_off[scene.flow_poly]
        pts = scene.poly_pts[start:start + count]
        best, tangent = math.inf, np.array([1.0, 0.0, 0.0])
        for i in range(len(pts) - 1):
            a, b = pts[i], pts[i + 1]
            ab = b - a
            denom = float(ab @ ab)
            t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
            dist = float(np.linalg.norm(p - (a + t * ab)))
            if dist < best:
                best = dist
                tangent = ab / math.sqrt(denom)
        profile = max(0.0, 1.0 - (best / r_ch) ** 2)
        return u_max * profile * tangent
    raise SceneError(f"unknown flow kind {scene.flow_kind}")


# ---------------------------------------------------------------------------
# builders

def _pack(prims: list[tuple[int, list[float], np.ndarray | None]],
          program: list[int]) -> dict:
    kinds, params, offs, pts = [], [], [], []
    cursor = 0
    for kind, par, poly in prims:
        kinds.append(kind)
        row = np.zeros(8)
        row[: len(par)] = par
        params.append(row)
        if poly is not None:
            offs.append((cursor, len(poly)))
            pts.append(np.asarray(poly, dtype=float))
            cursor += len(poly)
        else:
            offs.append((0, 0))
    return dict(
        prim_kind=np.array(kinds, dtype=np.int64),
        prim_params=np.array(params),
        poly_pts=np.vstack(pts) if pts else np.zeros((0, 3)),
        poly_off=np.array(offs, dtype=np.int64),
        program=np.array(program, dtype=np.int64),
    )


def serpentine_path(radii=(0.84e-3, 1.02e-3, 1.19e-3, 2.20e-3, 2.50e-3),
                    lead_in: float = 16e-3, lead_out: float = 4e-3,
                    ds: float = 1.5e-4) -> np.ndarray:
    """Meander centerline: straight lead-in (long enough to hold the robot at
    rest), alternating semicircular turns with the given radii, straight
    lead-out. Planar (z = 0)."""
    pts = [np.zeros(3)]
    pos = np.zeros(3)
    heading = np.array([1.0, 0.0, 0.0])

    def straight(length):
        nonlocal pos
        n = max(2, int(round(length / ds)))
        for i in range(1, n + 1):
            pts.append(pos + heading * (length * i / n))
        pos = pts[-1].copy()

    def turn(radius, sign):
        # semicircle; sign +1 curls counterclockwise, -1 clockwise
        nonlocal pos, heading
        normal = np.cross(np.array([0.0, 0.0, sign]), heading)
        center = pos + radius * normal
        n = max(8, int(round(math.pi * radius / ds)))
        start = pos - center
        for i in range(1, n + 1):
            ang = sign * math.pi * i / n
            c, s = math.cos(ang), math.sin(ang)
            rot = np.array([
                start[0] * c - start[1] * s,
                start[0] * s + start[1] * c,
                0.0,
            ])
            pts.append(center + rot)
        heading = np.array([-heading[0], -heading[1], 0.0])
        pos = pts[-1].copy()

    straight(lead_in)
    for i, r in enumerate(radii):
        turn(r, +1 if i % 2 == 0 else -1)
    straight(lead_out)
    return np.asarray(pts)


def _polyline_outline(path: np.ndarray, half_width: float) -> tuple[np.ndarray, ...]:
    """Left/right offset curves of a planar path, for plotting."""
    xy = path[:, :2]
    d = np.gradient(xy, axis=0)
    norm = np.linalg.norm(d, axis=1, keepdims=True)
    norm[norm == 0.0] = 1.0
    t = d / norm
    n = np.stack([-t[:, 1], t[:, 0]], axis=1)
    return (xy + half_width * n, xy - half_width * n)


def _circle_outline(cx, cy, r, n=64) -> np.ndarray:
    ang = np.linspace(0.0, 2.0 * math.pi, n)
    return np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1)


def build_tank(size=(0.4, 0.4, 0.4), fluid: Fluid | None = None) -> Scene:
    """Open water tank; floor at z = 0, lateral walls far from the work area."""
    hx, hy, hz = size[0] / 2.0, size[1] / 2.0, size[2] / 2.0
    packed = _pack([(PRIM_BOX, [0.0, 0.0, hz, hx, hy, hz], None)], [0])
    return Scene(
        name="tank", fluid=fluid or FLUID_PRESETS["water"],
        robot_start=np.array([-0.01, 0.0, 50e-6]),
        outline=(np.array([[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy], [-hx, -hy]]),),
        regions={"floor_z": 0.0},
        notes="open box; robots rest on the floor", **packed)


def build_serpentine(width: float = 1.0e-3, fluid: Fluid | None = None) -> Scene:
    """Planar meander channel with the five turn radii 0.84/1.02/1.19/2.20/2.50 mm.

    Channel lumen width is a reconstruction (1.0 mm) - narrow enough to guide,
    wide enough for the biggest head with margin.
    """
    path = serpentine_path()
    packed = _pack([(PRIM_CAPSULE_POLYLINE, [width / 2.0], path)], [0])
    return Scene(
        name="serpentine", fluid=fluid or FLUID_PRESETS["blood-mimic"],
        friction_coeff=0.15,   # resin channel lubricated by the glycerol mix
        contact_stiffness=40.0,  # capstan wall pressure in the triple-turn stretch
        robot_start=np.array([2e-4, 0.0, 0.0]),
        outline=_polyline_outline(path, width / 2.0),
        regions={"path": path, "half_width": width / 2.0},
        notes="turn radii 0.84-2.50 mm left to right; lumen width reconstructed",
        **packed)


def build_three_holes(hole_diameter: float = 1.5e-3, pitch: float = 10e-3,
                      thickness: float = 2e-3, plate_z: float = 10e-3,
                      fluid: Fluid | None = None) -> Scene:
    """Horizontal plate with three equidistant holes inside a tank.

    Hole pitch and plate thickness are reconstructions (10 mm / 2 mm).
    """
    hx = hy = 0.06
    hz = 0.03
    prims = [
        (PRIM_BOX, [0.0, 0.0, hz, hx, hy, hz], None),
        (PRIM_SLAB, [2.0, plate_z - thickness / 2.0, plate_z + thickness / 2.0], None),
    ]
    program = [0, 1, OP_COMPLEMENT]
    for i, cx in enumerate((-pitch, 0.0, pitch)):
        prims.append((PRIM_TUBE, [cx, 0.0, 0.0, 0.0, 0.0, 1.0, hole_diameter / 2.0], None))
        program.extend([2 + i, OP_UNION])
    program.append(OP_INTERSECT)
    packed = _pack(prims, program)
    outline = tuple(_circle_outline(cx, 0.0, hole_diameter / 2.0) for cx in (-pitch, 0.0, pitch))
    return Scene(
        name="three-holes", fluid=fluid or FLUID_PRESETS["water"],
        contact_stiffness=400.0,  # the head dives through holes at m/s speeds;
                                  # the floor must arrest it within its radius
        robot_start=np.array([-pitch - 5e-3, 0.0, plate_z + 3e-3]),
        outline=outline,
        regions={"plate_z": plate_z, "thickness": thickness,
                 "holes": [(-pitch, 0.0), (0.0, 0.0), (pitch, 0.0)]},
        notes="hole pitch and plate thickness reconstructed", **packed)


def build_bifurcation(fluid: Fluid | None = None) -> Scene:
    """Wide parent channel narrowing into a 2 mm branch that opens into a chamber."""
    h = 8e-3  # channel height; cargo (6.7 mm sphere) fits
    parent = (PRIM_BOX, [-15e-3, 0.0, h / 2.0, 15e-3, 12.5e-3, h / 2.0], None)
    branch_path = np.array([[0.0, 0.0, h / 2.0], [20e-3, 0.0, h / 2.0]])
    branch = (PRIM_CAPSULE_POLYLINE, [1e-3], branch_path)
    chamber = (PRIM_BOX, [35e-3, 0.0, h / 2.0, 15e-3, 10e-3, h / 2.0], None)
    packed = _pack([parent, branch, chamber], [0, 1, OP_UNION, 2, OP_UNION])
    cargo = CargoBody(radius=3.35e-3, mass=38e-6,
                      position=np.array([35e-3, 0.0, h / 2.0]),
                      velocity=np.zeros(3))
    return Scene(
        name="bifurcation", fluid=fluid or FLUID_PRESETS["water"],
        cargo=(cargo,), cargo_plane_z=h / 2.0,
        robot_start=np.array([-28e-3, 0.0, h / 2.0]),
        outline=(np.array([[-30e-3, -12.5e-3], [0.0, -12.5e-3], [0.0, -1e-3],
                           [20e-3, -1e-3], [20e-3, -10e-3], [50e-3, -10e-3],
                           [50e-3, 10e-3], [20e-3, 10e-3], [20e-3, 1e-3],
                           [0.0, 1e-3], [0.0, 12.5e-3], [-30e-3, 12.5e-3],
                           [-30e-3, -12.5e-3]]),
                 _circle_outline(35e-3, 0.0, 3.35e-3)),
        regions={"drop_zone": np.array([-20e-3, 6e-3, h / 2.0])},
        notes="parent up to 25 mm wide, branch 2 mm; cargo 38 mg, 6.7 mm sphere",
        **packed)


def aneurysm_dome(artery_radius: float, neck_diameter: float,
                  dome_height: float) -> tuple[float, float]:
    """Dome sphere (center height above axis, radius) from neck and height.

    The sphere top sits dome_height above the artery wall and its cut at wall
    level has the neck diameter.
    """
    a = artery_radius
    rn = neck_diameter / 2.0
    top = a + dome_height
    # (top - zc)^2 = R^2  and  R^2 - (a - zc)^2 = rn^2
    zc = (top**2 - a**2 - rn**2) / (2.0 * (top - a))
    R = top - zc
    return zc, R


def build_aneurysm(artery_diameter: float = 4e-3, neck_diameter: float = 4e-3,
                   dome_height: float = 7e-3, artery_length: float = 50e-3,
                   fluid: Fluid | None = None) -> Scene:
    """Straight parent artery with a spherical aneurysm dome on top.

    Artery and neck 4 mm, dome 7 mm high. Self-contact is enabled so the rod can
    entangle inside the dome.
    """
    a = artery_diameter / 2.0
    zc, R = aneurysm_dome(a, neck_diameter, dome_height)
    half = artery_length / 2.0
    artery_path = np.array([[-half, 0.0, 0.0], [half, 0.0, 0.0]])
    prims = [
        (PRIM_CAPSULE_POLYLINE, [a], artery_path),
        (PRIM_SPHERE, [0.0, 0.0, zc, R], None),
    ]
    packed = _pack(prims, [0, 1, OP_UNION])
    return Scene(
        name="aneurysm", fluid=fluid or FLUID_PRESETS["blood-mimic"],
        friction_coeff=0.12,  # smooth stereolithography phantom, glycerol-wetted
        self_contact=True,
        robot_start=np.array([-half + 2e-3, 0.0, -a / 2.0]),
        outline=(np.array([[-half, -a], [half, -a]]),
                 np.array([[-half, a], [-neck_diameter / 2.0, a]]),
                 np.array([[neck_diameter / 2.0, a], [half, a]]),
                 _circle_outline(0.0, zc, R)),
        regions={"dome_center": np.array([0.0, 0.0, zc]), "dome_radius": R,
                 "neck_z": a, "artery_radius": a},
        notes="dome sphere derived from 4 mm neck and 7 mm height",
        **packed)


_BUILDERS = {
    "tank": build_tank,
    "serpentine": build_serpentine,
    "three-holes": build_three_holes,
    "bifurcation": build_bifurcation,
    "aneurysm": build_aneurysm,
}


def list_scenes() -> list[str]:
    return sorted(_BUILDERS)


def build_scene(spec, fluid: Fluid | None = None) -> Scene:
    """Built-in scene by name, or a custom spec dict {"kind": ..., params}."""
    if isinstance(spec, str):
        if spec not in _BUILDERS:
            hint = difflib.get_close_matches(spec, _BUILDERS, n=3)
            raise SceneError(f"unknown scene {spec!r}; close matches: {hint or list_scenes()}")
        return _BUILDERS[spec](fluid=fluid)
    if not isinstance(spec, dict):
        raise SceneError(f"scene spec must be a name or a dict, got {type(spec).__name__}")
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _BUILDERS:
        raise SceneError(f"scene spec field 'kind': unknown value {kind!r}; options {list_scenes()}")
    try:
        return _BUILDERS[kind](fluid=fluid, **spec)
    except TypeError as exc:
        raise SceneError(f"scene spec for {kind!r}: {exc}") from None


def dome_arc_fraction(scene: Scene, positions: np.ndarray) -> float:
    """Fraction of rod arc-length inside the aneurysm dome (above the neck plane)."""
    center = scene.regions["dome_center"]
    radius = scene.regions["dome_radius"]
    neck_z = scene.regions["neck_z"]
    mid = 0.5 * (positions[:-1] + positions[1:])
    seg_len = np.linalg.norm(positions[1:] - positions[:-1], axis=1)
    inside = (np.linalg.norm(mid - center, axis=1) <= radius) & (mid[:, 2] >= neck_z)
    total = seg_len.sum()
    return float(seg_len[inside].sum() / total) if total > 0.0 else 0.0
