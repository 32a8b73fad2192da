"""Command-line entry points: solve, converge, trajectory, snell."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis, emitters, plots
from .factors import Cone, MinOfCones, snell_angles, refract_angles
from .oracles import eval_linear_speed_solution, visibility_field
from .scenario import (Scenario, ScenarioError, load_scenario, load_bundled,
                       bundled_names)
from .solver import SolverConfig, fmm_solve, source_cone_fans, METHODS
from .speed import speed_eval, FREE_SIDE
from .trajectory import extract_trajectory


def _fmt(v: float) -> str:
    return emitters._fmt(v)


def _resolve_scenario(ref: str) -> Scenario:
    if os.path.exists(ref):
        return load_scenario(ref)
    if ref.endswith(".json") or os.sep in ref:
        raise ScenarioError(f"scenario file not found: {ref}")
    return load_bundled(ref)


def _point(text: str) -> tuple[float, float]:
    try:
        x, y = (float(c) for c in text.split(","))
        return (x, y)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y - got {text!r}")


def _source_cones(case):
    cones = [Cone(tuple(s), speed_eval(case.speed, tuple(s), FREE_SIDE))
             for s in case.sources]
    return cones[0] if len(cones) == 1 else MinOfCones(cones)


def _method_config(scenario: Scenario, label: str):
    """Config factory for one comparison method; the scenario's own method
    keeps its full configuration, the rest get source-cone defaults."""
    s = scenario.solver
    if label == s["method"]:
        return scenario.config
    common = {"ball": s["ball"], "ball_radius": s["ball_radius"]}
    if label == "original":
        return lambda case: SolverConfig.original(**common)
    if label == "global_static":
        return lambda case: SolverConfig.global_static(
            _source_cones(case), **common)
    if label == "localized_static":
        return lambda case: SolverConfig.localized_static(
            source_cone_fans(case.world, case.speed, case.sources,
                             s["fan_radius"]), **common)
    if label == "switching_cones":
        raise ScenarioError(
            "solver.switch_corner: switching_cones comparison needs a "
            "scenario whose solver is switching_cones")
    return lambda case: SolverConfig.just_in_time(
        s["fan_radius"], s["corner_style"], **common)


def _truth_for(scenario: Scenario, levels: int):
    """Pick the reference: closed forms where they exist, otherwise one
    nested solve a level below the finest grid."""
    sp = scenario.speed
    non_permeable = all(ob.get("f_ob") is None for ob in scenario.obstacles)
    if not scenario.obstacles and sp["kind"] in ("constant", "linear"):
        if sp["kind"] == "constant":
            v, x0, f0 = (0.0, 0.0), (0.0, 0.0), sp["value"]
        else:
            v, x0 = tuple(sp["v"]), tuple(sp["x0"])
            f0 = None

        def oracle(X, Y):
            fields = []
            for src in scenario.sources:
                f_src = f0 if f0 is not None else (
                    1.0 / sp["s0"] + v[0] * (src[0] - x0[0])
                    + v[1] * (src[1] - x0[1]))
                fields.append(eval_linear_speed_solution(
                    X, Y, 1.0 / f_src, v, src))
            return np.minimum.reduce(fields)

        return analysis.make_oracle_truth(oracle)
    if sp["kind"] == "constant" and non_permeable:
        def truth(case):
            return visibility_field(case.world, case.sources) / sp["value"]
        return truth
    h_fine = scenario.base_h() * 0.5 ** levels
    return analysis.make_nested_truth(scenario.build, h_fine, scenario.config)


def _solve_scenario(scenario: Scenario):
    case = scenario.build()
    result = fmm_solve(case.grid, case.world, case.speed, case.sources,
                       scenario.config(case))
    return case, result


def cmd_solve(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    case, result = _solve_scenario(scenario)
    prefix = args.out_prefix
    wanted = scenario.outputs
    if "field_csv" in wanted:
        path = f"{prefix}_field.csv"
        emitters.emit_field_csv(case.grid, result.u, path)
        print(f"wrote {path}")
    if "heatmap_pgm" in wanted:
        path = f"{prefix}_heatmap.pgm"
        emitters.emit_heatmap_pgm(result.u, path)
        print(f"wrote {path}")
    if "plots" in wanted:
        path = f"{prefix}_field.png"
        plots.plot_field(case.grid, case.world, result.u, path,
                         fans=result.fans, sources=case.sources)
        print(f"wrote {path}")
    print(f"accepted {result.stats.n_accepted} nodes, "
          f"{result.stats.n_unreached} unreached, "
          f"{len(result.fans)} fans")
    return 0


def cmd_converge(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    labels = (args.methods.split(",") if args.methods
              else [scenario.solver["method"]])
    for label in labels:
        if label not in METHODS:
            raise ScenarioError(
                f"methods: expected one of {METHODS}, got {label!r}")
    methods = [(label, _method_config(scenario, label)) for label in labels]
    truth = _truth_for(scenario, args.levels)
    reports = analysis.run_refinement_study(
        scenario.build, methods, scenario.base_h(), args.levels, truth,
        tail=args.tail)

    sys.stdout.write("method,h,linf,l1,order_tail\n")
    for label, report in reports.items():
        order = report.order_linf()
        for row in report.rows:
            sys.stdout.write(f"{label},{_fmt(row.h)},{_fmt(row.linf)},"
                             f"{_fmt(row.l1)},{_fmt(order)}\n")
    if args.out_prefix:
        path = f"{args.out_prefix}_convergence.csv"
        emitters.emit_convergence_csv(reports, path)
        print(f"wrote {path}")
        if "plots" in scenario.outputs:
            path = f"{args.out_prefix}_convergence.png"
            plots.plot_convergence(reports, path)
            print(f"wrote {path}")
    return 0


def cmd_trajectory(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    case, result = _solve_scenario(scenario)
    traj = extract_trajectory(result.u, case.grid, case.world,
                              args.start, case.sources,
                              step=args.step, max_steps=args.max_steps)
    print(f"status: {traj.status.value}  length: {_fmt(traj.length)}",
          file=sys.stderr)
    sys.stdout.write("x,y\n")
    for x, y in traj.points:
        sys.stdout.write(f"{_fmt(x)},{_fmt(y)}\n")
    if args.out_prefix:
        path = f"{args.out_prefix}_trajectory.csv"
        emitters.emit_trajectory_csv(traj, path)
        print(f"wrote {path}", file=sys.stderr)
        if "plots" in scenario.outputs:
            path = f"{args.out_prefix}_trajectory.png"
            plots.plot_trajectory(case.grid, case.world, result.u, traj,
                                  path, sources=case.sources,
                                  fans=result.fans)
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_snell(args) -> int:
    angles = snell_angles(args.alpha, args.upsilon)
    theta2, theta3, _ = refract_angles(args.alpha, args.upsilon)
    print(f"beta = {_fmt(angles.beta)}")
    print(f"delta = {_fmt(angles.delta)}")
    print(f"theta2 = {_fmt(theta2)}")
    print(f"theta3 = {_fmt(theta3)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eikmarch",
        description="First-arrival solver with localized source/corner "
                    "factoring.  Scenarios are JSON files; a bare name "
                    f"picks a bundled one ({', '.join(bundled_names())}).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario and write outputs")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="grid-refinement error study")
    p.add_argument("--scenario", required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--tail", type=int, default=3)
    p.add_argument("--methods", default=None,
                   help="comma-separated method labels to compare")
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("trajectory", help="gradient-descent path to a source")
    p.add_argument("--scenario", required=True)
    p.add_argument("--from", required=True, type=_point, dest="start",
                   metavar="X,Y")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("snell", help="permeable-corner angles for one arrival")
    p.add_argument("--alpha", required=True, type=float,
                   help="arrival angle against the face, radians")
    p.add_argument("--upsilon", required=True, type=float,
                   help="free-to-obstacle speed ratio, > 1")
    p.set_defaults(func=cmd_snell)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
