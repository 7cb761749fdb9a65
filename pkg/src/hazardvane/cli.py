"""Operator command line: thin wrappers over the core pipeline.

Machine-readable JSON goes to stdout, human diagnostics to stderr.  Exit
codes: 0 on success, 2 on input validation errors (with a one-line diagnostic
naming the offending field or line).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .calibration import (
    GazeLaserSample,
    IcpParams,
    monte_carlo_study,
    register_icp,
    run_calibration_procedure,
)
from .config import ENV_CONFIG, AppConfig
from .geometry import RigidTransform
from .logio import MalformedLine, NonMonotoneTimestamp, dumps_compact, read_log, write_log
from .pipeline import run_replay
from .sim import (
    list_bundled_scenarios,
    load_scenario,
    resolve_scenario,
    run,
)


class CliError(Exception):
    """Validation failure; message is printed as the one-line diagnostic."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _emit(obj: dict) -> None:
    sys.stdout.write(dumps_compact(obj) + "\n")


def _truth_path(out: Path) -> Path:
    if out.suffix == ".jsonl":
        return out.with_name(out.stem + ".truth.jsonl")
    return out.with_name(out.name + ".truth")


def _load_transform_file(path: Path) -> RigidTransform:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        return RigidTransform(
            np.array(obj["rotation"], dtype=float),
            np.array(obj["translation"], dtype=float),
        )
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"calibration file {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    try:
        path = resolve_scenario(args.scenario, args.scenario_dir)
        scenario = load_scenario(path)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        raise CliError(f"scenario {args.scenario!r}: {exc}") from exc
    seed = args.seed if args.seed is not None else scenario.seed
    noisy, truth = run(scenario, seed=seed)
    out = Path(args.out)
    truth_out = _truth_path(out)
    write_log(noisy, out)
    write_log(truth, truth_out)
    print(f"{scenario.name}: {len(noisy)} records, seed {seed}", file=sys.stderr)
    _emit(
        {
            "scenario": scenario.name,
            "seed": seed,
            "records": len(noisy),
            "log": str(out),
            "truth": str(truth_out),
            "sha256": _sha256(out),
        }
    )
    return 0


def cmd_replay(args) -> int:
    cfg = AppConfig.from_env(args.config)
    try:
        records = read_log(args.log)
    except (MalformedLine, NonMonotoneTimestamp) as exc:
        raise CliError(f"log {args.log}: {exc}") from exc
    except OSError as exc:
        raise CliError(str(exc)) from exc
    calib = _load_transform_file(Path(args.calib))
    if args.scenario is not None:
        try:
            scenario = load_scenario(resolve_scenario(args.scenario, args.scenario_dir))
        except (FileNotFoundError, KeyError, ValueError) as exc:
            raise CliError(f"scenario {args.scenario!r}: {exc}") from exc
        cam, pose = scenario.scene_camera, scenario.scene_pose_M_to_S
    else:
        from .config import default_scene_camera, default_scene_pose

        cam, pose = default_scene_camera(), default_scene_pose()
    render_dir = Path(args.render) if args.render else None
    metrics_path = Path(args.metrics) if args.metrics else None
    vane_log = (render_dir / "vane.jsonl") if render_dir else Path(args.log).with_suffix(".vane.jsonl")
    metrics = run_replay(
        records,
        calib,
        cfg,
        cam,
        pose,
        render_dir=render_dir,
        metrics_path=metrics_path,
        vane_log_path=vane_log,
        render_every=args.render_every,
    )
    print(f"replayed {metrics['frames']} frames", file=sys.stderr)
    _emit(
        {
            "frames": metrics["frames"],
            "vane_log": str(vane_log),
            "metrics": str(metrics_path) if metrics_path else None,
            "suppression_events": metrics["suppression_events"],
        }
    )
    return 0


def _read_samples_jsonl(path: Path) -> list[GazeLaserSample]:
    samples = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CliError(str(exc)) from exc
    with fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                samples.append(
                    GazeLaserSample(
                        np.array(obj["gaze_origin"], dtype=float),
                        np.array(obj["gaze_dir"], dtype=float),
                        float(obj["laser_distance_m"]),
                        str(obj["id"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise CliError(f"samples {path} line {n}: {exc}") from exc
    return samples


def _read_target_file(path: Path):
    """Target geometry file: named planar points plus the target pose in M."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        points = {str(k): np.array(v, dtype=float) for k, v in obj["points"].items()}
        pose = RigidTransform(
            np.array(obj["pose_m"]["rotation"], dtype=float),
            np.array(obj["pose_m"]["translation"], dtype=float),
        )
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"target file {path}: {exc}") from exc
    return points, pose


def cmd_calibrate(args) -> int:
    samples = _read_samples_jsonl(Path(args.samples))
    points, pose = _read_target_file(Path(args.target))
    try:
        result = run_calibration_procedure(samples, pose, points)
        if args.method == "icp":
            pf = np.array(
                [s.gaze_origin_F + s.laser_distance * s.gaze_dir_F for s in samples]
            )
            pm = np.array([pose.apply(points[s.target_point_id]) for s in samples])
            result = register_icp(pf, pm, init=result.transform_F_to_M, params=IcpParams())
    except (ValueError, KeyError) as exc:
        raise CliError(f"calibration failed: {exc}") from exc
    t = result.transform_F_to_M
    out_obj = {
        "rotation": [[float(x) for x in row] for row in t.rotation],
        "translation": [float(x) for x in t.translation],
        "rms": result.rms_residual,
        "residuals": [float(r) for r in result.per_point_residuals],
        "iterations": result.iterations,
        "converged": result.converged,
        "method": args.method,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps_compact(out_obj) + "\n")
    residuals = " ".join(f"{r:.3e}" for r in result.per_point_residuals)
    print(f"rms {result.rms_residual:.6e} m over {len(samples)} samples", file=sys.stderr)
    print(f"residuals: {residuals}", file=sys.stderr)
    _emit(out_obj)
    return 0


def cmd_calib_synth(args) -> int:
    truth = _load_transform_file(Path(args.truth))
    # Target 2.5 m ahead of the sensor, facing back at it.
    target_pose = RigidTransform(
        np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
        np.array([2.5, 0.0, 1.0]),
    )
    counts = [int(c) for c in args.counts.split(",")] if args.counts else [args.n]
    study = monte_carlo_study(
        truth,
        target_pose,
        counts,
        trials=args.trials,
        gaze_sigma_rad=np.deg2rad(args.gaze_noise_deg),
        distance_sigma_m=args.dist_noise_m,
        seed=args.seed,
    )
    print(
        f"{args.trials} trials, gaze sigma {args.gaze_noise_deg} deg, "
        f"distance sigma {args.dist_noise_m} m",
        file=sys.stderr,
    )
    _emit({"counts": {str(k): v for k, v in study.items()}})
    return 0


def cmd_serve(args) -> int:
    from .service.app import PortInUse, serve

    cfg = AppConfig.from_env(args.config)
    try:
        serve(
            host=args.host,
            port=args.port,
            cfg=cfg,
            scenario_dir=Path(args.scenario_dir) if args.scenario_dir else None,
        )
    except PortInUse as exc:
        raise CliError(str(exc)) from exc
    return 0


def cmd_scenarios(args) -> int:
    names = set(list_bundled_scenarios())
    if args.scenario_dir:
        names.update(p.stem for p in Path(args.scenario_dir).glob("*.json"))
    _emit({"scenarios": sorted(names)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hazardvane",
        description="Scenario simulation, replay, calibration and the live session service.",
    )
    p.add_argument(
        "--config",
        default=None,
        help=f"defaults file (JSON); also read from ${ENV_CONFIG}",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write JSONL logs")
    s.add_argument("--scenario", required=True, help="scenario name or path")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True, help="output JSONL log path")
    s.add_argument("--scenario-dir", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("replay", help="offline pipeline over a recorded log")
    s.add_argument("--log", required=True)
    s.add_argument("--calib", required=True, help="calibration JSON (rotation/translation)")
    s.add_argument("--render", default=None, help="directory for PPM frames + vane.jsonl")
    s.add_argument("--metrics", default=None, help="metrics JSON output path")
    s.add_argument("--scenario", default=None, help="scenario for scene-camera overrides")
    s.add_argument("--scenario-dir", default=None)
    s.add_argument("--render-every", type=int, default=1)
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("calibrate", help="recover the F->M transform from samples")
    s.add_argument("--samples", required=True, help="JSONL gaze+laser samples")
    s.add_argument("--target", required=True, help="target geometry JSON")
    s.add_argument("--method", choices=["kabsch", "icp"], default="kabsch")
    s.add_argument("--out", default=None, help="write the calibration JSON here")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("calib-synth", help="Monte-Carlo calibration noise study")
    s.add_argument("--truth", required=True, help="ground-truth calibration JSON")
    s.add_argument("--n", type=int, default=8, help="samples per trial")
    s.add_argument("--counts", default=None, help="comma-separated sample counts")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--gaze-noise-deg", type=float, default=0.5)
    s.add_argument("--dist-noise-m", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_calib_synth)

    s = sub.add_parser("serve", help="start the session service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8732)
    s.add_argument("--scenario-dir", default=None)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("scenarios", help="list available scenarios")
    s.add_argument("--scenario-dir", default=None)
    s.set_defaults(func=cmd_scenarios)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
