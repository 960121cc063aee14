"""Command line interface.

Exit codes: 0 success, 1 a scenario's claim failed, 2 bad input,
3 unsupported configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from .config import DEFAULT_TOLERANCES
from .detector import DetectedWall, EvaluationReport, evaluate, run_detection
from .exceptions import EchoWallError, ScenarioFailure, UnsupportedConfiguration
from .experiments import SCENARIOS, ExperimentSpec, PoseSampler, figure_vehicle, montecarlo_bad_fraction, scenario
from .experiments import FIG_AXIS, FIG_SPEAKER, FIG_Z1
from .geometry import Plane, Pose, VehicleConfig
from .scenefile import (SceneFileError, dump_scene, load_scene, number_to_json, parse_number,
                        pose_to_json, scene_to_dict, vec_to_json)
from .simulator import simulate_echoes, squared_distances
from .stacks import StackCertificate, check_stack, make_stack

EXIT_OK, EXIT_CLAIM, EXIT_BAD_INPUT, EXIT_UNSUPPORTED = 0, 1, 2, 3


class BadInput(EchoWallError, ValueError):
    pass


def _numbers(text: str, count: Sequence[int], what: str, exact: bool) -> list:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) not in count:
        raise BadInput(f"{what} needs {' or '.join(map(str, count))} comma-separated numbers")
    try:
        return [parse_number(p, exact) for p in parts]
    except SceneFileError as e:
        raise BadInput(f"{what}: {e}") from e


def parse_pose(text: Optional[str], exact: bool) -> Pose:
    """``THETA,TX,TY[,TZ]``.  In exact mode the heading is replaced by the
    nearest rational rotation and the translations are read exactly."""
    if not text:
        return Pose()
    theta, *rest = _numbers(text, (3, 4), "--pose", exact=True)
    tz = rest[2] if len(rest) == 3 else 0
    if exact:
        return Pose.exact_near(float(theta), rest[0], rest[1], tz)
    return Pose.from_angle(float(theta), float(rest[0]), float(rest[1]), float(tz))


def _load(args):
    exact = args.mode == "exact"
    scene, config = load_scene(args.scene, exact=exact)
    if getattr(args, "config", None):
        config = _load_config(args.config, exact, config)
    return scene, config, exact


def _load_config(path, exact, base: VehicleConfig) -> VehicleConfig:
    try:
        data = json.loads(Path(path).read_text())
        dim = base.dimension
        mics = tuple(tuple(parse_number(x, exact) for x in m) for m in data["mics"])
        offset = data.get("speaker_offset")
        offset = tuple(parse_number(x, exact) for x in offset) if offset is not None else base.speaker_offset
        if any(len(m) != dim for m in mics):
            raise BadInput("config microphones do not match the scene dimension")
        return VehicleConfig(mics, offset)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise BadInput(f"cannot read vehicle config {path}: {e}") from e


def _wall_json(w: DetectedWall) -> dict:
    return {"mirror": vec_to_json(w.mirror), "plane": _plane_json(w.plane),
            "residual": w.residual, "support": w.support}


def _plane_json(p: Plane) -> dict:
    return {"normal": vec_to_json(p.normal), "anchor": vec_to_json(p.anchor)}


def _report_json(r: EvaluationReport) -> dict:
    return {"is_bad_position": r.is_bad_position,
            "true_walls_found": [_plane_json(p) for p in r.true_walls_found],
            "ghosts": [_wall_json(g) for g in r.ghosts],
            "missed": [_plane_json(p) for p in r.missed]}


def _cert_json(c: Optional[StackCertificate]):
    if c is None:
        return None
    return {"wall_indices": list(c.wall_indices), "axis": vec_to_json(c.axis),
            "ghost": vec_to_json(c.ghost), "deltas": vec_to_json(c.deltas)}


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _detect(args):
    scene, config, exact = _load(args)
    pose = parse_pose(args.pose, exact)
    rec = simulate_echoes(scene, config, pose, audibility=args.audibility == "on")
    result = run_detection(squared_distances(rec), config.mics(pose), scene.speaker_position(config, pose),
                           mode=args.mode, threshold=args.threshold)
    return scene, config, pose, result


def cmd_simulate(args) -> int:
    scene, config, exact = _load(args)
    pose = parse_pose(args.pose, exact)
    rec = simulate_echoes(scene, config, pose, audibility=args.audibility == "on")
    _emit({"mode": args.mode, "pose": pose_to_json(pose), "t0": number_to_json(rec.t0),
           "c": number_to_json(rec.c), "times": [[float(t) for t in ts] for ts in rec.times],
           "squared_distances": [vec_to_json(sorted(ds)) for ds in squared_distances(rec)]}, args.out)
    return EXIT_OK


def cmd_detect(args) -> int:
    _, _, pose, result = _detect(args)
    _emit({"mode": args.mode, "pose": pose_to_json(pose), "n_tuples": result.n_tuples,
           "n_passed": result.n_passed, "n_discarded": result.n_discarded,
           "walls": [_wall_json(w) for w in result.walls]}, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    scene, config, pose, result = _detect(args)
    report = evaluate(result.walls, scene, config, pose, audibility=args.audibility == "on")
    _emit({"mode": args.mode, "pose": pose_to_json(pose), **_report_json(report)}, args.out)
    return EXIT_OK


def cmd_stack_make(args) -> int:
    exact = args.mode == "exact"
    if args.scene:
        base, config, _ = _load(args)
        if base.mounted:
            raise BadInput("stacks need a fixed loudspeaker")
        speaker = base.speaker
    else:
        config, _ = figure_vehicle()
        speaker = FIG_SPEAKER
    pose = parse_pose(args.pose, exact)
    axis = _numbers(args.axis, (2,), "--axis", exact) if args.axis else list(FIG_AXIS)
    z1 = parse_number(args.z1, exact) if args.z1 is not None else FIG_Z1
    scene, cert = make_stack(config, pose, axis, z1, speaker)
    if args.out:
        dump_scene(scene, config, args.out)
        sys.stdout.write(json.dumps({"certificate": _cert_json(cert)}, indent=2) + "\n")
    else:
        _emit({"scene": scene_to_dict(scene, config), "certificate": _cert_json(cert)}, None)
    return EXIT_OK


def cmd_stack_check(args) -> int:
    scene, config, exact = _load(args)
    if scene.mounted:
        raise BadInput("stacks need a fixed loudspeaker")
    if scene.dimension != 3:
        raise BadInput("stacks are a 3D phenomenon")
    cert = check_stack(scene, config, parse_pose(args.pose, exact))
    if cert is None:
        sys.stdout.write("none\n")
    else:
        sys.stdout.write(json.dumps(_cert_json(cert), indent=2) + "\n")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    scene, config, exact = _load(args)
    box = _numbers(args.pose_box, (4,), "--pose-box", exact=True)
    hover = _numbers(args.hover_range, (2,), "--hover-range", exact=True) if args.hover_range else None
    spec = ExperimentSpec(scene, config, args.mode, PoseSampler(tuple(box), tuple(hover) if hover else None),
                          args.samples, args.seed, args.audibility == "on")
    result = montecarlo_bad_fraction(spec)
    if args.out:
        Path(args.out).write_text(result.to_csv())
    summary = {"n_poses": result.n_poses, "n_bad": result.n_bad, "bad_fraction": result.bad_fraction,
               "example_bad_poses": [{"index": r.index, "pose": pose_to_json(r.pose),
                                      "ghosts": [_wall_json(g) for g in r.ghosts]}
                                     for r in result.example_bad_poses]}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_scenario(args) -> int:
    res = scenario(args.name)
    details = {}
    for k, v in res.details.items():
        if isinstance(v, Plane):
            details[k] = _plane_json(v)
        elif isinstance(v, (list, tuple)):
            details[k] = [vec_to_json(x) if isinstance(x, tuple) else number_to_json(x) for x in v]
        elif isinstance(v, (Fraction, int, float)) and not isinstance(v, bool):
            details[k] = number_to_json(v)
        else:
            details[k] = v
    _emit({"scenario": res.name, "claim": res.claim, "claim_holds": True,
           "pose": pose_to_json(res.pose), "detected": [_wall_json(w) for w in res.detected],
           **_report_json(res.report), "certificate": _cert_json(res.certificate),
           "details": details}, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echowall", description="Wall detection from first-order echoes.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def scene_cmd(name, helptext, func, scene_required=True):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--scene", required=scene_required, help="scene file (JSON)")
        p.add_argument("--config", help="vehicle config JSON overriding the scene's microphones")
        p.add_argument("--mode", choices=("exact", "float"), default="exact")
        p.add_argument("--pose", help="THETA,TX,TY[,TZ] (radians, metres)")
        p.add_argument("--audibility", choices=("on", "off"), default="off")
        p.add_argument("--out", help="output file (default: stdout)")
        p.set_defaults(func=func)
        return p

    scene_cmd("simulate", "simulate first-order echo arrival times", cmd_simulate)
    p = scene_cmd("detect", "run wall detection at one pose", cmd_detect)
    p.add_argument("--threshold", type=float, default=None,
                   help=f"float-mode residual threshold (default {DEFAULT_TOLERANCES.cm_residual})")
    p = scene_cmd("evaluate", "detect and classify ghosts against the scene", cmd_evaluate)
    p.add_argument("--threshold", type=float, default=None)

    p = scene_cmd("stack-make", "build walls forming an unlucky stack", cmd_stack_make, scene_required=False)
    p.add_argument("--axis", help="X,Y of the vertical stack line")
    p.add_argument("--z1", help="height of the first mirror point")
    scene_cmd("stack-check", "search a scene for an unlucky stack", cmd_stack_check)

    p = scene_cmd("montecarlo", "estimate the fraction of bad poses", cmd_montecarlo)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--pose-box", default="-1,1,-1,1", help="XMIN,XMAX,YMIN,YMAX for translations")
    p.add_argument("--hover-range", help="ZMIN,ZMAX for hover offsets")

    p = sub.add_parser("scenario", help="reproduce a figure scenario and check its claim")
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_scenario)
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_BAD_INPUT
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_BAD_INPUT
    try:
        return args.func(args)
    except UnsupportedConfiguration as e:
        print(f"echowall: unsupported configuration: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ScenarioFailure as e:
        print(f"echowall: claim failed: {e}", file=sys.stderr)
        return EXIT_CLAIM
    except (EchoWallError, ValueError) as e:
        print(f"echowall: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
