"""Command-line entry points.

Subcommands: fab (fabrication predictions), run (headless scenario run), exp
(characterization experiments), serve (teleoperation server). Errors print one
machine-parsable line with the prefix "ERR:" and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

import magworm
from magworm import units
from magworm.designs import get_design, list_designs
from magworm.environment import list_scenes
from magworm.fabrication import (FilmState, Variant, calibrate_draw_constant,
                                 critical_film_thickness, film_breakup_decision,
                                 predict_bead_geometry, predict_fiber_diameter)


def _parse_calib(text: str) -> tuple[float, float]:
    try:
        d_str, v_str = text.split("@", 1)
    except ValueError:
        raise units.UnitError(
            f"calibration {text!r} must look like '622.56um@6mm_s'") from None
    return units.parse_length(d_str), units.parse_speed(v_str)


def cmd_fab(args) -> int:
    d_obs, v_obs = _parse_calib(args.draw_calib)
    model = calibrate_draw_constant(d_obs, v_obs)
    v = units.parse_speed(args.v)
    D = predict_fiber_diameter(model, v)
    c_lab = model.draw_constant / (1e-6 * math.sqrt(1e-3))
    print(f"draw constant C = {c_lab:.2f} um*(mm/s)^0.5")
    print(f"D = {D * 1e6:.2f} um at v = {v * 1e3:g} mm/s")
    h_t = critical_film_thickness(D)
    print(f"critical film thickness h_t = {h_t * 1e6:.2f} um")
    if args.film_h is not None:
        h = units.parse_length(args.film_h)
        state = film_breakup_decision(D, h)
        print(f"film {h * 1e6:.2f} um -> {state.value}")
        if state is FilmState.BEADS:
            geom = predict_bead_geometry(D, h)
            lo, hi = geom.spacing_interval
            print(f"bead spacing = {geom.spacing * 1e6:.1f} um "
                  f"(band {lo * 1e6:.1f} .. {hi * 1e6:.1f} um)")
            print(f"bead volume = {geom.bead_volume:.4g} m^3 "
                  f"(minor diameter {geom.minor_diameter * 1e6:.1f} um)")
    return 0


def _write_run_figure(scenario, traj, out_dir: str) -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 5))
    for line in scenario.world.scene.outline:
        ax.plot(line[:, 0] * 1e3, line[:, 1] * 1e3, "-", color="0.6", lw=0.8)
    stride = max(1, traj.n_frames // 12)
    for k in range(0, traj.n_frames, stride):
        ax.plot(traj.x[k, :, 0] * 1e3, traj.x[k, :, 1] * 1e3, "-", lw=0.9,
                color=plt.cm.viridis(k / max(1, traj.n_frames - 1)))
    ax.plot(traj.x[:, -1, 0] * 1e3, traj.x[:, -1, 1] * 1e3, "r-", lw=0.6,
            label="head path")
    ax.plot(traj.magnet_pos[:, 0] * 1e3, traj.magnet_pos[:, 1] * 1e3, "b--", lw=0.6,
            label="magnet path")
    if traj.cargo_x.shape[1]:
        ax.plot(traj.cargo_x[:, 0, 0] * 1e3, traj.cargo_x[:, 0, 1] * 1e3, "g-",
                lw=1.0, label="cargo")
    ax.set_aspect("equal")
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("y [mm]")
    ax.legend(fontsize=7)
    ax.set_title(scenario.name)
    fig.tight_layout()
    path = os.path.join(out_dir, "trajectory.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def cmd_run(args) -> int:
    from magworm.engine import ExternalController, run
    from magworm.scenario import parse_scenario, write_resolved

    scenario = parse_scenario(args.scenario)
    controller = scenario.controller
    duration = scenario.duration
    if args.replay:
        with open(args.replay) as fh:
            log = json.load(fh)
        cmds = [(int(c["step"]), np.array(c["position"], dtype=float),
                 np.array(c["axis"], dtype=float)) for c in log["commands"]]
        magnet = scenario.world.magnet
        if magnet is None:
            print("ERR: replay needs a scenario with a magnet", file=sys.stderr)
            return 2
        controller = ExternalController(magnet.position, magnet.moment_axis, cmds)
        duration = log["final_step"] * scenario.world.config.dt
    traj = run(scenario.world, controller, duration)
    out_dir = args.out or f"out_{scenario.name}"
    os.makedirs(out_dir, exist_ok=True)
    write_resolved(scenario, out_dir)
    if scenario.outputs.csv:
        traj.to_csv(out_dir)
    if scenario.outputs.figures:
        _write_run_figure(scenario, traj, out_dir)
    if args.hash or scenario.outputs.hash:
        print(traj.hash_hex())
    return 0


def _designs_from_args(args, experiment: str):
    from magworm.experiments import quartet_for
    if args.design:
        return [get_design(name) for name in args.design]
    return list(quartet_for(experiment).values())


def cmd_exp(args) -> int:
    from magworm import experiments as xp

    out_dir = args.out or "out_experiments"
    if args.which == "compare":
        experiment = args.experiment or "deflection"
        designs = _designs_from_args(args, experiment)
        table, report = xp.compare_designs(designs, experiment)
        report.write_all(out_dir)
        print(f"{'rank':>4}  {'design':<28} {experiment}")
        for rank, name, value in table:
            print(f"{rank:>4}  {name:<28} {value:.6g}")
        path = os.path.join(out_dir, f"compare_{experiment}.csv")
        with open(path, "w") as fh:
            fh.write(f"rank,design,{experiment}\n")
            for rank, name, value in table:
                fh.write(f"{rank},{name},{value!r}\n")
        return 0
    if args.which == "sweep":
        grid = {}
        for item in args.grid or []:
            key, _, values = item.partition("=")
            grid[key] = [units.parse_length(v) for v in values.split(",") if v]
        best, table = xp.design_sweep(grid, objective=args.objective or "deflection")
        xp.sweep_table_csv(table, out_dir, args.objective or "deflection")
        print(f"best design: {best.name}")
        for row in table:
            print(row)
        return 0

    designs = _designs_from_args(args, args.which)
    fn = xp.EXPERIMENTS[args.which]
    report = fn(designs)
    paths = report.write_all(out_dir)
    for v in report.verdicts:
        print(f"[{'PASS' if v.passed else 'FAIL'}] {v.criterion}: "
              f"measured {v.measured:.6g} (expected {v.expected})")
    for note in report.notes:
        print(f"note: {note}")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_serve(args) -> int:
    from magworm.scenario import parse_scenario
    from magworm.teleop import serve_teleop

    scenario = parse_scenario(args.scenario)
    serve_teleop(scenario, port=args.port, rt_factor=args.rt_factor, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magworm",
                                description="slender magnetic filament robot toolkit")
    p.add_argument("--version", action="store_true", help="print version and exit")
    p.add_argument("--list-scenes", action="store_true", help="list built-in scenes")
    p.add_argument("--list-designs", action="store_true", help="list built-in designs")
    sub = p.add_subparsers(dest="command")

    fab = sub.add_parser("fab", help="fabrication predictions from the draw/film laws")
    fab.add_argument("--draw-calib", required=True,
                     help="observed diameter@speed, e.g. 622.56um@6mm_s")
    fab.add_argument("--v", required=True, help="draw speed, e.g. 24mm_s")
    fab.add_argument("--film-h", help="coating film thickness, e.g. 50um")

    runp = sub.add_parser("run", help="headless scenario run")
    runp.add_argument("scenario")
    runp.add_argument("--out", help="output directory")
    runp.add_argument("--hash", action="store_true", help="print the trajectory hash")
    runp.add_argument("--replay", help="command-log JSON to replay")

    exp = sub.add_parser("exp", help="characterization experiments")
    exp.add_argument("which", choices=["deflection", "curvature", "speed", "compare", "sweep"])
    exp.add_argument("--design", action="append", help="design name (repeatable)")
    exp.add_argument("--experiment", help="experiment for 'compare'")
    exp.add_argument("--objective", help="objective for 'sweep'")
    exp.add_argument("--grid", action="append",
                     help="sweep grid, e.g. head_diameter=200um,220um")
    exp.add_argument("--out", help="output directory")

    srv = sub.add_parser("serve", help="teleoperation server")
    srv.add_argument("scenario")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--rt-factor", type=float, default=1.0,
                     help="simulated seconds per wall second")
    srv.add_argument("--ui", help="directory with the built UI bundle")

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.version:
            print(magworm.__version__)
            return 0
        if args.list_scenes:
            for name in list_scenes():
                print(name)
            return 0
        if args.list_designs:
            for name in list_designs():
                print(name)
            return 0
        if args.command == "fab":
            return cmd_fab(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "exp":
            return cmd_exp(args)
        if args.command == "serve":
            return cmd_serve(args)
        parser.print_help()
        return 0
    except BrokenPipeError:
        return 0
    except Exception as exc:  # one-line machine-parsable failure
        print(f"ERR: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
