"""Scenario files: schema-validated JSON describing a world + controller + outputs.

Schema version "1". All lengths/speeds/times carry explicit unit suffixes; unknown
keys are rejected; errors carry JSON-pointer paths. parse_scenario resolves every
default and echoes a canonical "resolved" document that re-parses to the same
world (round-trip property).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from magworm import units
from magworm.designs import DESIGNS, get_design
from magworm.engine import (ClampSpec, ExternalController, RotatingField, ScriptedPath,
                            SimConfig, StaticPose, World, stability_dt)
from magworm.environment import Scene, SceneError, build_scene, list_scenes
from magworm.fabrication import (BeadGeometry, MaterialSet, RobotDesign, Variant,
                                 calibrate_draw_constant, design_from_fabrication)
from magworm.hydro import FLUID_PRESETS, Fluid
from magworm.magnetics import MagnetSource, calibrate_magnet_magnetization
from magworm.robot import MagnetizationPolicy, assign_magnetization, discretize

SCHEMA_VERSION = "1"
SCENE_PATH_ENV = "MAGWORM_SCENE_PATH"


class ScenarioParseError(ValueError):
    """Schema violation with a JSON-pointer-ish path in the message."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MaterialsSpec(_Model):
    E_fiber_Pa: float | None = None
    E_composite_Pa: float | None = None
    remanence: str | None = None       # e.g. "5 mT"
    density_fiber_kg_m3: float | None = None
    density_composite_kg_m3: float | None = None

    def build(self) -> MaterialSet:
        base = MaterialSet()
        return MaterialSet(
            E_fiber=self.E_fiber_Pa if self.E_fiber_Pa is not None else base.E_fiber,
            E_composite=self.E_composite_Pa if self.E_composite_Pa is not None else base.E_composite,
            remanence=units.parse_field(self.remanence) if self.remanence is not None else base.remanence,
            density_fiber=self.density_fiber_kg_m3 if self.density_fiber_kg_m3 is not None else base.density_fiber,
            density_composite=self.density_composite_kg_m3 if self.density_composite_kg_m3 is not None else base.density_composite,
        )


class DesignSpec(_Model):
    variant: Literal["boas-big-head", "boas", "magnetic-layer", "fiber-big-head"]
    fiber_diameter: str
    length: str
    bead_diameter: str | None = None
    bead_spacing: str | None = None
    layer_thickness: str | None = None
    head_diameter: str | None = None
    materials: MaterialsSpec | None = None
    name: str = "custom"

    def build(self) -> RobotDesign:
        variant = Variant(self.variant)
        d = units.parse_length(self.fiber_diameter)
        geom = None
        if variant.has_beads:
            if self.bead_diameter is None:
                raise ScenarioParseError("/design/bead_diameter: required for beaded variants")
            bead_d = units.parse_length(self.bead_diameter)
            spacing = (units.parse_length(self.bead_spacing)
                       if self.bead_spacing is not None else 7.7 * d)
            geom = BeadGeometry(
                spacing=spacing,
                spacing_interval=(min(6.3 * d, spacing), max(9.1 * d, spacing)),
                bead_volume=(4.0 / 3.0) * math.pi * (bead_d / 2.0) ** 3)
        mats = (self.materials or MaterialsSpec()).build()
        return RobotDesign(
            variant=variant, fiber_diameter=d, length=units.parse_length(self.length),
            bead_geometry=geom,
            layer_thickness=units.parse_length(self.layer_thickness)
            if self.layer_thickness is not None else None,
            head_diameter=units.parse_length(self.head_diameter)
            if self.head_diameter is not None else None,
            materials=mats, name=self.name)


class FabricationSpec(_Model):
    variant: Literal["boas-big-head", "boas", "magnetic-layer", "fiber-big-head"]
    calibration_diameter: str     # observed fiber diameter, e.g. "622.56 um"
    calibration_speed: str        # e.g. "6 mm/s"
    draw_speed: str
    film_thickness: str
    head_diameter: str | None = None
    length: str = "20 mm"
    materials: MaterialsSpec | None = None
    name: str = "fabricated"

    def build(self) -> RobotDesign:
        model = calibrate_draw_constant(units.parse_length(self.calibration_diameter),
                                        units.parse_speed(self.calibration_speed))
        return design_from_fabrication(
            Variant(self.variant), model, units.parse_speed(self.draw_speed),
            units.parse_length(self.film_thickness),
            head_diameter=units.parse_length(self.head_diameter)
            if self.head_diameter is not None else None,
            length=units.parse_length(self.length),
            materials=(self.materials or MaterialsSpec()).build(), name=self.name)


class SceneSpec(_Model):
    kind: Literal["tank", "serpentine", "three-holes", "bifurcation", "aneurysm"]
    width: str | None = None            # serpentine lumen width
    size: list[str] | None = None       # tank
    hole_diameter: str | None = None
    pitch: str | None = None
    thickness: str | None = None
    plate_z: str | None = None
    artery_diameter: str | None = None
    neck_diameter: str | None = None
    dome_height: str | None = None
    artery_length: str | None = None

    def build(self, fluid: Fluid) -> Scene:
        kw = {}
        if self.kind == "tank" and self.size is not None:
            kw["size"] = tuple(units.parse_length(s) for s in self.size)
        if self.kind == "serpentine" and self.width is not None:
            kw["width"] = units.parse_length(self.width)
        if self.kind == "three-holes":
            for k in ("hole_diameter", "pitch", "thickness", "plate_z"):
                v = getattr(self, k)
                if v is not None:
                    kw[k] = units.parse_length(v)
        if self.kind == "aneurysm":
            for k in ("artery_diameter", "neck_diameter", "dome_height", "artery_length"):
                v = getattr(self, k)
                if v is not None:
                    kw[k] = units.parse_length(v)
        return build_scene({"kind": self.kind, **kw}, fluid=fluid)


class CalibrationSpec(_Model):
    field: str      # "14.95 mT"
    distance: str   # "19 mm"


class MagnetSpec(_Model):
    radius: str = "15 mm"
    height: str = "30 mm"
    magnetization: str | None = None      # "750 kA/m"; exactly one of this or calibration
    calibration: CalibrationSpec | None = None
    position: list[str]
    axis: list[float]

    @model_validator(mode="after")
    def _one_mode(self):
        if (self.magnetization is None) == (self.calibration is None):
            raise ValueError("state exactly one of 'magnetization' or 'calibration'")
        if len(self.position) != 3 or len(self.axis) != 3:
            raise ValueError("position and axis must have 3 components")
        return self

    def build(self) -> MagnetSource:
        R = units.parse_length(self.radius)
        h = units.parse_length(self.height)
        if self.magnetization is not None:
            M = units.parse_magnetization(self.magnetization)
        else:
            M = calibrate_magnet_magnetization(
                R, h, units.parse_length(self.calibration.distance),
                units.parse_field(self.calibration.field))
        return MagnetSource(R, h, M,
                            position=np.array([units.parse_length(p) for p in self.position]),
                            moment_axis=np.array(self.axis, dtype=float))


class RobotSpec(_Model):
    start: list[str] | None = None       # default: scene start pose
    direction: list[float] | None = None
    segment_length: str = "0.5 mm"
    magnetization_policy: Literal["along-body", "transverse-uniform"] = "along-body"
    clamp: bool = False


class WaypointSpec(_Model):
    t: str
    position: list[str]
    axis: list[float]


class ControllerSpec(_Model):
    type: Literal["static", "scripted", "rotating", "external"] = "static"
    waypoints: list[WaypointSpec] | None = None
    position: list[str] | None = None
    axis0: list[float] | None = None
    spin_axis: list[float] | None = None
    omega: str | None = None   # "1 turn/s" or "6.28 rad/s"

    @model_validator(mode="after")
    def _fields_for_type(self):
        if self.type == "scripted" and not self.waypoints:
            raise ValueError("scripted controller needs waypoints")
        if self.type == "rotating" and (self.position is None or self.omega is None):
            raise ValueError("rotating controller needs position and omega")
        return self

    def build(self, magnet: MagnetSource | None):
        if self.type == "static" or magnet is None:
            if magnet is None:
                return None
            return StaticPose(magnet.position, magnet.moment_axis)
        if self.type == "scripted":
            times = [units.parse_time(w.t) for w in self.waypoints]
            pos = [[units.parse_length(p) for p in w.position] for w in self.waypoints]
            axes = [w.axis for w in self.waypoints]
            return ScriptedPath(times=times, positions=pos, axes=axes)
        if self.type == "rotating":
            return RotatingField(
                position=np.array([units.parse_length(p) for p in self.position]),
                axis0=np.array(self.axis0 if self.axis0 is not None else magnet.moment_axis,
                               dtype=float),
                spin_axis=np.array(self.spin_axis or [0.0, 0.0, 1.0], dtype=float),
                omega=units.parse_angular_velocity(self.omega))
        return ExternalController(magnet.position, magnet.moment_axis)


class SimSpec(_Model):
    dt: str = "auto"
    duration: str = "1 s"
    record_stride: int = 1000
    gravity: bool = True
    buoyancy: bool = True
    self_contact: bool | None = None
    damping_extra_per_s: float = 0.0


class OutputsSpec(_Model):
    csv: bool = True
    figures: bool = True
    hash: bool = True


class ScenarioDoc(_Model):
    schema_version: str
    design: str | DesignSpec | None = None
    fabrication: FabricationSpec | None = None
    scene: str | SceneSpec = "tank"
    fluid: str = "water"
    magnet: MagnetSpec | None = None
    robot: RobotSpec = RobotSpec()
    sim: SimSpec = SimSpec()
    controller: ControllerSpec = ControllerSpec()
    outputs: OutputsSpec = OutputsSpec()

    @model_validator(mode="after")
    def _design_source(self):
        if (self.design is None) == (self.fabrication is None):
            raise ValueError("state exactly one of 'design' or 'fabrication'")
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {self.schema_version!r}; "
                             f"this build reads {SCHEMA_VERSION!r}")
        return self


@dataclass
class Scenario:
    world: World
    controller: object
    duration: float
    outputs: OutputsSpec
    resolved: dict
    name: str


def _pointer(loc: tuple) -> str:
    return "/" + "/".join(str(p) for p in loc)


def _fluid_from(name: str) -> Fluid:
    if name not in FLUID_PRESETS:
        import difflib
        hint = difflib.get_close_matches(name, FLUID_PRESETS, n=2)
        raise ScenarioParseError(
            f"/fluid: unknown preset {name!r}; close matches: {hint or sorted(FLUID_PRESETS)}")
    return FLUID_PRESETS[name]


def scenario_search_paths(extra: str | None = None) -> list[str]:
    paths = []
    env = os.environ.get(SCENE_PATH_ENV, "")
    for p in ([extra] if extra else []) + env.split(os.pathsep):
        if p:
            paths.append(p)
    paths.append(os.path.join(os.path.dirname(__file__), "data", "scenarios"))
    return paths


def find_scenario(name: str) -> str:
    if os.path.exists(name):
        return name
    for root in scenario_search_paths():
        cand = os.path.join(root, name)
        if os.path.exists(cand):
            return cand
        cand_json = cand + ".json"
        if os.path.exists(cand_json):
            return cand_json
    raise ScenarioParseError(f"scenario {name!r} not found in {scenario_search_paths()}")


def list_scenarios() -> list[str]:
    found = []
    for root in scenario_search_paths():
        if os.path.isdir(root):
            found.extend(f for f in sorted(os.listdir(root)) if f.endswith(".json"))
    return found


def parse_scenario(path_or_doc, name: str = "") -> Scenario:
    """Load, validate and build a scenario; all defaults are resolved and echoed."""
    if isinstance(path_or_doc, dict):
        raw = path_or_doc
        name = name or "inline"
    else:
        path = find_scenario(str(path_or_doc))
        name = name or os.path.splitext(os.path.basename(path))[0]
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioParseError(f"{path}: not valid JSON: {exc}") from None
    # accept the on-disk key "schema" for the version field
    if "schema" in raw:
        raw = dict(raw)
        raw["schema_version"] = raw.pop("schema")
    try:
        doc = ScenarioDoc.model_validate(raw)
    except ValidationError as exc:
        msgs = [f"{_pointer(e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ScenarioParseError("; ".join(msgs)) from None
    try:
        return _build(doc, name)
    except units.UnitError as exc:
        raise ScenarioParseError(str(exc)) from None


def _build(doc: ScenarioDoc, name: str) -> Scenario:
    fluid = _fluid_from(doc.fluid)
    if isinstance(doc.scene, str):
        try:
            scene = build_scene(doc.scene, fluid=fluid)
        except SceneError as exc:
            raise ScenarioParseError(f"/scene: {exc}") from None
    else:
        scene = doc.scene.build(fluid)

    if isinstance(doc.design, str):
        try:
            design = get_design(doc.design)
        except KeyError as exc:
            raise ScenarioParseError(f"/design: {exc.args[0]}") from None
    elif doc.design is not None:
        design = doc.design.build()
    else:
        design = doc.fabrication.build()

    seg_len = units.parse_length(doc.robot.segment_length)
    policy = (MagnetizationPolicy.ALONG_BODY
              if doc.robot.magnetization_policy == "along-body"
              else MagnetizationPolicy.TRANSVERSE_UNIFORM)
    rod = assign_magnetization(discretize(design, seg_len),
                               design.materials.remanence, policy)

    magnet = doc.magnet.build() if doc.magnet is not None else None
    start = (np.array([units.parse_length(p) for p in doc.robot.start])
             if doc.robot.start is not None else scene.robot_start)
    direction = (np.array(doc.robot.direction, dtype=float)
                 if doc.robot.direction is not None else scene.robot_dir)

    cfg = SimConfig(
        dt=None if doc.sim.dt == "auto" else units.parse_time(doc.sim.dt),
        damping_extra=doc.sim.damping_extra_per_s,
        gravity_on=doc.sim.gravity, buoyancy_on=doc.sim.buoyancy,
        self_contact=doc.sim.self_contact, record_stride=doc.sim.record_stride)
    clamp = ClampSpec(direction=direction) if doc.robot.clamp else None
    try:
        world = World(rod=rod, scene=scene, magnet=magnet, config=cfg, clamp=clamp,
                      start_position=start, start_dir=direction)
    except ValueError as exc:
        raise ScenarioParseError(f"/sim/dt: {exc}") from None

    controller = doc.controller.build(magnet)
    duration = units.parse_time(doc.sim.duration)

    resolved = _resolve_doc(doc, design, scene, world, start, direction)
    return Scenario(world=world, controller=controller, duration=duration,
                    outputs=doc.outputs, resolved=resolved, name=name)


def _fmt_len(v: float) -> str:
    # 12 significant digits: sub-picometre here, and a fixed point under
    # re-parsing (derived quantities like bead volume round-trip bit-stably)
    return f"{float(f'{float(v):.12g}')!r} m"


def _resolve_doc(doc: ScenarioDoc, design, scene, world, start, direction) -> dict:
    """Canonical fully-resolved scenario document (re-parses to the same world)."""
    geom = design.bead_geometry
    design_block = {
        "variant": design.variant.value,
        "fiber_diameter": _fmt_len(design.fiber_diameter),
        "length": _fmt_len(design.length),
        "name": design.name,
    }
    if geom is not None:
        design_block["bead_diameter"] = _fmt_len(geom.minor_diameter)
        design_block["bead_spacing"] = _fmt_len(geom.spacing)
    if design.layer_thickness is not None:
        design_block["layer_thickness"] = _fmt_len(design.layer_thickness)
    if design.head_diameter is not None:
        design_block["head_diameter"] = _fmt_len(design.head_diameter)
    m = design.materials
    design_block["materials"] = {
        "E_fiber_Pa": m.E_fiber, "E_composite_Pa": m.E_composite,
        "remanence": f"{float(m.remanence)!r} T",
        "density_fiber_kg_m3": m.density_fiber,
        "density_composite_kg_m3": m.density_composite,
    }

    scene_block = doc.scene if isinstance(doc.scene, str) else doc.scene.model_dump(exclude_none=True)
    magnet_block = None
    if world.magnet is not None:
        magnet_block = {
            "radius": _fmt_len(world.magnet.radius),
            "height": _fmt_len(world.magnet.height),
            "magnetization": f"{float(world.magnet.magnetization)!r} A/m",
            "position": [_fmt_len(v) for v in world.magnet.position],
            "axis": [float(v) for v in world.magnet.moment_axis],
        }
    ctrl_block = {"type": doc.controller.type}
    if doc.controller.type == "scripted":
        ctrl_block["waypoints"] = [
            {"t": f"{float(units.parse_time(w.t))!r} s",
             "position": [_fmt_len(units.parse_length(p)) for p in w.position],
             "axis": [float(a) for a in w.axis]}
            for w in doc.controller.waypoints]
    elif doc.controller.type == "rotating":
        ctrl_block["position"] = [_fmt_len(units.parse_length(p)) for p in doc.controller.position]
        ctrl_block["axis0"] = ([float(a) for a in doc.controller.axis0]
                               if doc.controller.axis0 is not None
                               else [float(a) for a in world.magnet.moment_axis])
        ctrl_block["spin_axis"] = [float(a) for a in (doc.controller.spin_axis or [0.0, 0.0, 1.0])]
        ctrl_block["omega"] = f"{float(units.parse_angular_velocity(doc.controller.omega))!r} rad/s"

    return {
        "schema": SCHEMA_VERSION,
        "design": design_block,
        "scene": scene_block,
        "fluid": doc.fluid,
        "magnet": magnet_block,
        "robot": {
            "start": [_fmt_len(v) for v in start],
            "direction": [float(v) for v in direction],
            "segment_length": _fmt_len(units.parse_length(doc.robot.segment_length)),
            "magnetization_policy": doc.robot.magnetization_policy,
            "clamp": doc.robot.clamp,
        },
        "sim": {
            "dt": f"{float(world.config.dt)!r} s",
            "duration": f"{float(units.parse_time(doc.sim.duration))!r} s",
            "record_stride": doc.sim.record_stride,
            "gravity": doc.sim.gravity,
            "buoyancy": doc.sim.buoyancy,
            "self_contact": bool(world.config.self_contact),
            "damping_extra_per_s": doc.sim.damping_extra_per_s,
        },
        "controller": ctrl_block,
        "outputs": doc.outputs.model_dump(),
    }


def write_resolved(scenario: Scenario, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "resolved.json")
    with open(path, "w") as fh:
        json.dump(scenario.resolved, fh, indent=2)
    return path
