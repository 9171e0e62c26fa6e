"""Command-line interface.

Subcommands: guide (hand stream -> joint trajectory), register (model +
scene + seed -> refined pose), sweep (seed-perturbation robustness CSV),
replay (trajectory -> command-vs-state trace CSV), serve (live session
service).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import fileio
from .controller import ControllerState, replay as replay_trajectory
from .errors import HandguideError
from .geometry import RigidTransform, quat_from_axis_angle
from .guidance import GuidanceConfig, GuidanceEngine
from .kinematics import JointState, clamped_zero_state, load_chain
from .meshes import read_point_cloud, write_point_cloud
from .registration import (IcpConfig, SeedPose, icp_register,
                           model_cloud_from_chain, robustness_sweep)
from .service import MODEL_CLOUD_SAMPLES


def _parse_floats(text: str, n: int, what: str) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise HandguideError(f"{what}: expected {n} numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise HandguideError(f"{what}: expected numbers, got {text!r}")


def _seed_pose(text: str, crop_radius: float) -> SeedPose:
    vals = _parse_floats(text, 4, "--seed-pose (x,y,z,yaw_deg)")
    pose = RigidTransform(quat_from_axis_angle((0.0, 0.0, 1.0), math.radians(vals[3])),
                          vals[:3])
    return SeedPose(pose, crop_radius)


def _initial_state(args, chain) -> JointState:
    if args.state is None:
        return clamped_zero_state(chain)
    angles = _parse_floats(args.state, chain.n_joints, "--state")
    return JointState(angles)


def _model_cloud(args) -> np.ndarray:
    if args.model is not None:
        return read_point_cloud(args.model)
    if args.chain is None:
        raise HandguideError("need either --model or --chain to build the model cloud")
    chain = load_chain(args.chain)
    return model_cloud_from_chain(chain, _initial_state(args, chain),
                                  args.samples, args.seed)


def cmd_guide(args) -> int:
    chain = load_chain(args.chain)
    config = GuidanceConfig(motion_scale=args.k, active_zone_scale=args.zone_scale)
    engine = GuidanceEngine(chain, config, _initial_state(args, chain))
    samples = fileio.read_hand_stream(args.hand)
    lines = []
    for sample in samples:
        result = engine.process(sample)
        if result.emit_target:
            lines.append(fileio.trajectory_line(sample.timestamp, result.state.angles))
    with open(args.out, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
    print(f"guide: {len(samples)} samples in, {len(lines)} targets out -> {args.out}")
    return 0


def cmd_register(args) -> int:
    model = _model_cloud(args)
    scene = read_point_cloud(args.scene)
    seed = _seed_pose(args.seed_pose, args.crop_radius)
    cfg = IcpConfig(max_iterations=args.max_iterations,
                    max_correspondence_distance=args.max_distance,
                    convergence_delta=args.convergence_delta,
                    mls_radius=args.mls_radius)
    result = icp_register(model, scene, seed, cfg)
    doc = {
        "pose": {"pos": [float(v) for v in result.pose.translation],
                 "quat": [float(v) for v in result.pose.rotation]},
        "rms": result.rms,
        "iterations": result.iterations,
        "converged": result.converged,
        "inlier_fraction": result.inlier_fraction,
    }
    print(json.dumps(doc))
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as f:
            f.write("rms,iterations,converged,inlier_fraction,"
                    "px,py,pz,qw,qx,qy,qz\n")
            p = result.pose.translation
            q = result.pose.rotation
            f.write(",".join([repr(result.rms), str(result.iterations),
                              str(result.converged).lower(),
                              repr(result.inlier_fraction)]
                             + [repr(float(v)) for v in p]
                             + [repr(float(v)) for v in q]) + "\n")
    return 0 if result.converged else 1


def cmd_sweep(args) -> int:
    model = _model_cloud(args)
    scene = read_point_cloud(args.scene)
    seed = _seed_pose(args.seed_pose, args.crop_radius)
    cfg = IcpConfig(max_iterations=args.max_iterations,
                    max_correspondence_distance=args.max_distance,
                    convergence_delta=args.convergence_delta,
                    mls_radius=args.mls_radius)
    kinds = ("rotation", "translation") if args.mode == "both" else (args.mode,)
    report = robustness_sweep(model, scene, seed, cfg, kinds=kinds)
    report.write_csv(args.out)
    summary = report.summary()
    for label, s in summary.items():
        print(f"{label}: mean={s['mean']:.6f} min={s['min']:.6f} "
              f"max={s['max']:.6f} std={s['std']:.6f} n={s['count']}")
    print(f"sweep: {len(report.entries)} runs -> {args.out}")
    return 0


def cmd_replay(args) -> int:
    chain = load_chain(args.chain)
    traj = fileio.read_trajectory(args.traj)
    for angles in traj.states:
        if len(angles) != chain.n_joints:
            raise HandguideError(
                f"trajectory has {len(angles)} joints, chain has {chain.n_joints}")
    start = JointState(np.clip(traj.states[0],
                               [j.lower for j in chain.joints],
                               [j.upper for j in chain.joints]), traj.times[0])
    ctrl = ControllerState.from_chain(chain, start)
    pairs = replay_trajectory(traj, ctrl, args.rate)
    fileio.write_command_state_csv(
        args.out, [(s.timestamp, c.angles, s.angles) for c, s in pairs])
    print(f"replay: {len(pairs)} ticks at {args.rate} Hz -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    config = GuidanceConfig(motion_scale=args.k, active_zone_scale=args.zone_scale)
    print(f"serving on ws://{args.host}:{args.port}/ws (clock {args.rate} Hz)")
    serve(args.host, args.port, default_chain=args.chain, rate=args.rate,
          static_dir=args.static, config=config, rng_seed=args.seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handguide")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_icp_flags(p):
        p.add_argument("--max-iterations", type=int, default=100)
        p.add_argument("--max-distance", type=float, default=0.25,
                       help="correspondence rejection distance (m)")
        p.add_argument("--convergence-delta", type=float, default=1e-5)
        p.add_argument("--mls-radius", type=float, default=0.05)
        p.add_argument("--crop-radius", type=float, default=2.5)

    def add_model_flags(p):
        p.add_argument("--model", help="model point cloud (PLY)")
        p.add_argument("--chain", help="chain document to sample the model from")
        p.add_argument("--state", help="joint angles for the model pose (comma separated)")
        p.add_argument("--samples", type=int, default=MODEL_CLOUD_SAMPLES)
        p.add_argument("--seed", type=int, default=0, help="sampling RNG seed")

    p = sub.add_parser("guide", help="convert a hand stream to a joint trajectory")
    p.add_argument("--chain", required=True)
    p.add_argument("--hand", required=True, help="hand stream (JSON lines)")
    p.add_argument("--out", required=True, help="output trajectory (JSON lines)")
    p.add_argument("--k", type=float, default=1.0, help="motion scaling factor")
    p.add_argument("--zone-scale", type=float, default=1.5)
    p.add_argument("--state", help="initial joint angles (comma separated)")
    p.set_defaults(func=cmd_guide)

    p = sub.add_parser("register", help="register the model cloud to a scene cloud")
    add_model_flags(p)
    p.add_argument("--scene", required=True, help="scene point cloud (PLY)")
    p.add_argument("--seed-pose", required=True, help="x,y,z,yaw_deg seed guess")
    p.add_argument("--out", help="write a one-row result CSV here")
    add_icp_flags(p)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("sweep", help="seed-perturbation robustness sweep")
    add_model_flags(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--seed-pose", required=True, help="x,y,z,yaw_deg true seed")
    p.add_argument("--mode", choices=("rotation", "translation", "both"),
                   default="both")
    p.add_argument("--out", required=True, help="sweep CSV path")
    add_icp_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="run a trajectory through the controller")
    p.add_argument("--chain", required=True)
    p.add_argument("--traj", required=True, help="trajectory (JSON lines)")
    p.add_argument("--rate", type=float, default=100.0, help="tick rate (Hz)")
    p.add_argument("--out", required=True, help="command-vs-state CSV")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--chain", help="chain to preload into every session")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8473)
    p.add_argument("--rate", type=float, default=100.0, help="clock rate (Hz)")
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--zone-scale", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0, help="model sampling RNG seed")
    p.add_argument("--static", help="directory with the browser UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HandguideError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
