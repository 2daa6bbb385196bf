#!/usr/bin/env python3
"""Regenerate the built-in scenario JSON files (scripted magnet waypoints).

The scripted paths are geometry-derived: the serpentine guide follows the channel
centerline with a lead offset; the embolization script approaches the neck, turns
the head up into the dome, swirls, then parks. Run from the repo root:
    python3 tools/generate_scenarios.py
"""

import json
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from magworm.environment import serpentine_path  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "magworm", "data", "scenarios")


def mm(v):
    return f"{float(v) * 1e3:.6g} mm"


def sec(v):
    return f"{float(v):.6g} s"


def waypoint(t, pos, axis):
    return {"t": sec(t), "position": [mm(p) for p in pos],
            "axis": [round(float(a), 9) for a in axis]}


def arc_length_param(path):
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return s


def path_point(path, s_arr, s):
    s = np.clip(s, 0.0, s_arr[-1])
    i = np.searchsorted(s_arr, s) - 1
    i = np.clip(i, 0, len(path) - 2)
    f = (s - s_arr[i]) / max(s_arr[i + 1] - s_arr[i], 1e-12)
    p = path[i] + f * (path[i + 1] - path[i])
    t = path[i + 1] - path[i]
    return p, t / np.linalg.norm(t)


def serpentine_scenario():
    # guiding magnet: the 10x10 mm characterization magnet (calibrated), face
    # about 1.5 mm under the channel plate - a physically placeable stand-off
    path = serpentine_path()
    s_arr = arc_length_param(path)
    head0 = 15.2e-3            # head rest arc position (robot 0.2..15.2 mm)
    lead = 0.8e-3              # short lead: the pull must follow the 0.84 mm turns
    z_gap = 6.5e-3             # magnet center below the channel plane (5 mm half-height)
    speed = 2.0e-3             # m/s along the path
    total = (s_arr[-1] - head0 - 1e-3) / speed
    wps = []
    t = 0.0
    while t <= total + 1e-9:
        s_m = head0 + lead + speed * t
        p, tan = path_point(path, s_arr, s_m)
        wps.append(waypoint(t, [p[0], p[1], -z_gap], [-tan[0], -tan[1], 0.0]))
        t += 0.05
    # hold at the end so the tail finishes the last turn
    p, tan = path_point(path, s_arr, s_arr[-1] - 0.5e-3)
    wps.append(waypoint(total + 2.0, [p[0], p[1], -z_gap], [-tan[0], -tan[1], 0.0]))
    return {
        "schema": "1",
        "design": "boas-big-head-nav",
        "scene": "serpentine",
        "fluid": "blood-mimic",
        "magnet": {"radius": "5 mm", "height": "10 mm",
                   "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                   "position": wps[0]["position"], "axis": wps[0]["axis"]},
        "robot": {"segment_length": "0.5 mm"},
        "sim": {"dt": "auto", "duration": sec(total + 2.0), "record_stride": 2000},
        "controller": {"type": "scripted", "waypoints": wps},
        "outputs": {"csv": True, "figures": True, "hash": True},
    }


def aneurysm_scenario():
    # artery along x (robot head starts near the neck), dome sphere on top.
    # 10x10 mm magnet above the dome: center stays >= half-height + clearance
    # above the dome top so the placement is physical and forces stay bounded.
    z_dome_top = 9e-3
    z_near = z_dome_top + 0.5e-3 + 5e-3     # face 0.5 mm above the dome (entry pull)
    z_swirl = z_dome_top + 3.5e-3 + 5e-3    # swirl from farther: the coil must be
                                            # free to rotate, not nailed to the dome
    z_under = -(2e-3 + 3e-3 + 5e-3)         # saw stroke under the vessel
    z_far = z_dome_top + 6e-3 + 5e-3
    duration_approach = 1.5
    duration_entry = 2.5
    swirl_turns = 6.0
    swirl_period = 2.0
    duration_swirl = swirl_turns * swirl_period
    hold = 2.0
    wps = []
    # approach: magnet above, pulling the head back over the neck center
    wps.append(waypoint(0.0, [1e-3, 0.0, z_far], [0, 0, 1]))
    wps.append(waypoint(duration_approach, [-1e-3, 0.0, z_near + 2e-3], [0, 0, 1]))
    # entry: pull the head up through the neck (slightly behind center so the
    # head clears the neck rim instead of pressing the artery ceiling)
    wps.append(waypoint(duration_approach + duration_entry,
                        [-0.5e-3, 0.0, z_near], [0, 0, 1]))
    # entry jiggle: moment axis spinning in-plane unsticks the headfrom the
    # neck rim (the rotating field relaxes the ceiling press each half turn)
    t0 = duration_approach + duration_entry
    n_jig = int(6.0 / 0.05)
    for k in range(1, n_jig + 1):
        t = t0 + 6.0 * k / n_jig
        ang = 2.0 * math.pi * (t - t0) / swirl_period
        wps.append(waypoint(t, [0.0, 0.0, z_swirl],
                            [math.cos(ang), math.sin(ang), 0.15]))
    t0 += 6.0
    # wind: the head is magnetically nailed below the magnet, so orbiting the
    # magnet position drags the head around the dome and the inextensible body
    # must feed in through the neck (positive-displacement reeling). The orbit
    # radius ramps up over the first turn; the axis keeps spinning.
    n_samp = int(duration_swirl / 0.05)
    for k in range(1, n_samp + 1):
        t = t0 + duration_swirl * k / n_samp
        ang = 2.0 * math.pi * (t - t0) / swirl_period
        r_orb = 2.5e-3 * min(1.0, (t - t0) / swirl_period)
        wps.append(waypoint(t, [r_orb * math.cos(ang), r_orb * math.sin(ang),
                                z_near],
                            [math.cos(ang), math.sin(ang), 0.15]))
    t1 = t0 + duration_swirl
    # park centered above the dome, slightly withdrawn so the coil relaxes inside
    wps.append(waypoint(t1 + hold, [0.0, 0.0, z_swirl], [0, 0, 1]))
    total = t1 + hold
    _ = z_under
    return {
        "schema": "1",
        "design": "boas-big-head-embolic",
        "scene": "aneurysm",
        "fluid": "blood-mimic",
        "magnet": {"radius": "5 mm", "height": "10 mm",
                   "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                   "position": wps[0]["position"], "axis": wps[0]["axis"]},
        "robot": {"segment_length": "0.7 mm"},
        "sim": {"dt": "auto", "duration": sec(total), "record_stride": 2000},
        "controller": {"type": "scripted", "waypoints": wps},
        "outputs": {"csv": True, "figures": True, "hash": True},
    }


def three_holes_scenario():
    plate_z = 10e-3
    above = plate_z + 8.5e-3   # min head-magnet gap stays ~8 mm (bounded pull)
    below = -12e-3             # under the tank: bounded pull on the floor-resting head
    side_y = -30e-3            # transition corridor well clear of the robot
    holes = [-10e-3, 0.0, 10e-3]
    wps = []
    t = 0.0
    # weave: below hole1 (head dives), above hole2, below hole3. Between phases
    # the magnet is routed around the side of the plate, never through it.
    sides = [below, above, below]
    prev_z = None
    for hole_x, z in zip(holes, sides):
        axis = [0, 0, -1] if z < plate_z else [0, 0, 1]
        if prev_z is not None:
            wps.append(waypoint(t + 1.0, [hole_x - 6e-3, side_y, prev_z], axis))
            wps.append(waypoint(t + 2.0, [hole_x - 6e-3, side_y, z], axis))
            t += 2.0
        wps.append(waypoint(t + 1.0, [hole_x - 4e-3, 0.0, z], axis))
        t += 3.0
        wps.append(waypoint(t, [hole_x, 0.0, z], axis))
        t += 3.0
        wps.append(waypoint(t, [hole_x + 4e-3, 0.0, z], axis))
        t += 1.0
        prev_z = z
    return {
        "schema": "1",
        "design": "boas-big-head-nav",
        "scene": "three-holes",
        "fluid": "water",
        "magnet": {"radius": "5 mm", "height": "10 mm",
                   "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                   "position": wps[0]["position"], "axis": wps[0]["axis"]},
        "robot": {"segment_length": "0.5 mm"},
        "sim": {"dt": "auto", "duration": sec(t + 1.0), "record_stride": 2000},
        "controller": {"type": "scripted", "waypoints": wps},
        "outputs": {"csv": True, "figures": True, "hash": True},
    }


def cargo_scenario():
    z_gap = 7e-3    # 10x10 magnet center below the channel floor
    cargo_x, cargo_y = 35e-3, 0.0
    wps = []
    # approach through the branch
    wps.append(waypoint(0.0, [-20e-3, 0.0, -z_gap], [-1, 0, 0]))
    wps.append(waypoint(4.0, [10e-3, 0.0, -z_gap], [-1, 0, 0]))
    wps.append(waypoint(8.0, [cargo_x - 6e-3, 0.0, -z_gap], [-1, 0, 0]))
    # wrap: one loop around the cargo
    t0, period = 9.0, 4.0
    for k in range(41):
        t = t0 + period * k / 40 * 1.25
        ang = math.pi + 2.0 * math.pi * 1.25 * k / 40
        px = cargo_x + 5.5e-3 * math.cos(ang)
        py = cargo_y + 5.5e-3 * math.sin(ang)
        tangent = [-math.sin(ang), math.cos(ang)]
        wps.append(waypoint(t, [px, py, -z_gap], [-tangent[0], -tangent[1], 0.0]))
    # drag toward the drop zone
    t1 = t0 + period * 1.25
    wps.append(waypoint(t1 + 6.0, [5e-3, 6e-3, -z_gap], [-1, 0, 0]))
    return {
        "schema": "1",
        "design": "cargo-carrier",
        "scene": "bifurcation",
        "fluid": "water",
        "magnet": {"radius": "5 mm", "height": "10 mm",
                   "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                   "position": wps[0]["position"], "axis": wps[0]["axis"]},
        "robot": {"segment_length": "1.2 mm"},
        "sim": {"dt": "auto", "duration": sec(t1 + 6.0), "record_stride": 2000},
        "controller": {"type": "scripted", "waypoints": wps},
        "outputs": {"csv": True, "figures": True, "hash": True},
    }


def teleop_scenario():
    return {
        "schema": "1",
        "design": "boas-big-head-nav",
        "scene": "tank",
        "fluid": "water",
        "magnet": {"radius": "5 mm", "height": "10 mm",
                   "calibration": {"field": "14.95 mT", "distance": "19 mm"},
                   "position": ["0 mm", "0 mm", "-7 mm"], "axis": [-1, 0, 0]},
        "robot": {"segment_length": "0.5 mm"},
        "sim": {"dt": "auto", "duration": "60 s", "record_stride": 1000},
        "controller": {"type": "external"},
        "outputs": {"csv": False, "figures": False, "hash": True},
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    docs = {
        "serpentine-navigation.json": serpentine_scenario(),
        "aneurysm-embolization.json": aneurysm_scenario(),
        "three-holes.json": three_holes_scenario(),
        "cargo-transport.json": cargo_scenario(),
        "tank-teleop.json": teleop_scenario(),
    }
    for name, doc in docs.items():
        path = os.path.join(OUT, name)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
        print("wrote", path)


if __name__ == "__main__":
    main()
