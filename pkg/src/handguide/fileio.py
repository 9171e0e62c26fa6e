"""Line-delimited JSON interchange files and CSV traces.

Hand streams: one ``{"t": s, "pos": [x, y, z], "grasp": bool}`` object per
line. Joint trajectories: one ``{"t": s, "angles": [...]}`` per line. Floats
round-trip exactly through json, so identical data produces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .controller import Trajectory, record
from .errors import TrajectoryError
from .guidance import HandSample
from .kinematics import JointState


def _lines(path) -> Iterable[tuple[int, dict]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise TrajectoryError(f"cannot read {path}: {e}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TrajectoryError(f"{path}:{lineno}: invalid JSON: {e.msg}")
        yield lineno, obj


def read_hand_stream(path) -> list[HandSample]:
    samples = []
    last_t = None
    for lineno, obj in _lines(path):
        try:
            sample = HandSample(np.asarray(obj["pos"], dtype=float),
                                float(obj["t"]), bool(obj["grasp"]))
        except (KeyError, TypeError, ValueError) as e:
            raise TrajectoryError(f"{path}:{lineno}: bad hand sample: {e}")
        if last_t is not None and sample.timestamp <= last_t:
            raise TrajectoryError(
                f"{path}:{lineno}: timestamps must strictly increase "
                f"({sample.timestamp} after {last_t})")
        last_t = sample.timestamp
        samples.append(sample)
    if not samples:
        raise TrajectoryError(f"{path}: no hand samples")
    return samples


def write_hand_stream(path, samples: Iterable[HandSample]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            for s in samples:
                f.write(json.dumps({"t": s.timestamp, "pos": list(s.position),
                                    "grasp": s.grasping}) + "\n")
    except OSError as e:
        raise TrajectoryError(f"cannot write {path}: {e}")


def read_trajectory(path) -> Trajectory:
    traj = Trajectory()
    for lineno, obj in _lines(path):
        try:
            t = float(obj["t"])
            angles = np.asarray(obj["angles"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise TrajectoryError(f"{path}:{lineno}: bad trajectory sample: {e}")
        try:
            traj = record(traj, t, JointState(angles, t))
        except TrajectoryError as e:
            raise TrajectoryError(f"{path}:{lineno}: {e}")
    if len(traj) == 0:
        raise TrajectoryError(f"{path}: empty trajectory")
    return traj


def write_trajectory(path, traj: Trajectory) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            for t, angles in traj:
                f.write(json.dumps({"t": t, "angles": list(angles)}) + "\n")
    except OSError as e:
        raise TrajectoryError(f"cannot write {path}: {e}")


def trajectory_line(t: float, angles) -> str:
    return json.dumps({"t": t, "angles": [float(a) for a in angles]})


def write_command_state_csv(path, rows: Iterable[tuple[float, np.ndarray, np.ndarray]]) -> None:
    """Fig-style trace: per tick, the commanded target and the actual state."""
    rows = list(rows)
    if not rows:
        raise TrajectoryError("no rows for command/state trace")
    n = len(rows[0][1])
    with open(path, "w", encoding="ascii") as f:
        cols = ["t"] + [f"cmd_{j}" for j in range(n)] + [f"state_{j}" for j in range(n)]
        f.write(",".join(cols) + "\n")
        for t, cmd, state in rows:
            vals = [repr(float(t))] + [repr(float(v)) for v in cmd] + \
                   [repr(float(v)) for v in state]
            f.write(",".join(vals) + "\n")
