"""Online-retargetable interpolated joint-position controller.

Each joint follows its own time-optimal trapezoidal velocity profile toward
the target, replanned from the current position and velocity on every tick,
so a new target can arrive mid-motion without any stop or discontinuity.
Velocity and acceleration limits come from the chain; arrival is exact (the
final tick lands on the target with zero velocity, no overshoot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import TargetLimitError, TrajectoryError
from .kinematics import JointState, KinematicChain


@dataclass(frozen=True)
class ControllerState:
    position: np.ndarray
    velocity: np.ndarray
    target: np.ndarray
    time: float
    max_velocity: np.ndarray
    max_acceleration: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @staticmethod
    def from_chain(chain: KinematicChain, state: JointState) -> "ControllerState":
        angles = state.angles.copy()
        return ControllerState(
            position=angles,
            velocity=np.zeros_like(angles),
            target=angles.copy(),
            time=state.timestamp,
            max_velocity=np.array([j.max_velocity for j in chain.joints]),
            max_acceleration=np.array([j.max_acceleration for j in chain.joints]),
            lower=np.array([j.lower for j in chain.joints]),
            upper=np.array([j.upper for j in chain.joints]),
        )

    @property
    def current(self) -> JointState:
        return JointState(self.position.copy(), self.time)

    @property
    def arrived(self) -> bool:
        return bool(np.all(self.position == self.target) and np.all(self.velocity == 0.0))


def set_target(ctrl: ControllerState, target: JointState) -> ControllerState:
    """Replace the target; motion replans from the current position and velocity."""
    angles = np.asarray(target.angles, dtype=float)
    if angles.shape != ctrl.position.shape:
        raise TargetLimitError(
            f"target has {angles.shape[0]} angles, controller has {ctrl.position.shape[0]}")
    bad = (angles < ctrl.lower) | (angles > ctrl.upper)
    if bad.any():
        j = int(np.nonzero(bad)[0][0])
        raise TargetLimitError(
            f"target angle {angles[j]!r} for joint {j} outside limits "
            f"[{ctrl.lower[j]}, {ctrl.upper[j]}]")
    return replace(ctrl, target=angles.copy())


def _advance_joint(p: float, v: float, target: float, vmax: float, amax: float,
                   dt: float) -> tuple[float, float]:
    """Integrate one joint dt seconds along its replanned time-optimal profile."""
    d = target - p
    if d == 0.0 and v == 0.0:
        return target, 0.0
    # displacement consumed by braking to rest from the current velocity
    d_brake = v * abs(v) / (2.0 * amax)
    if d == d_brake:
        sigma = 1.0 if v >= 0.0 else -1.0
    else:
        sigma = 1.0 if d > d_brake else -1.0
    u0 = sigma * v
    D = sigma * d

    peak = math.sqrt(max(amax * D + 0.5 * u0 * u0, 0.0))
    if peak > vmax:
        t_acc = (vmax - u0) / amax
        d_cruise = D - (vmax * vmax - u0 * u0) / (2.0 * amax) - vmax * vmax / (2.0 * amax)
        t_cruise = max(d_cruise, 0.0) / vmax
        t_dec = vmax / amax
        peak = vmax
    else:
        t_acc = (peak - u0) / amax
        t_cruise = 0.0
        t_dec = peak / amax

    if dt >= t_acc + t_cruise + t_dec:
        return target, 0.0

    # piecewise-exact integration of the first dt seconds (sigma frame)
    s = 0.0
    u = u0
    remaining = dt
    for duration, acc in ((t_acc, amax), (t_cruise, 0.0), (t_dec, -amax)):
        step = min(remaining, duration)
        s += u * step + 0.5 * acc * step * step
        u += acc * step
        remaining -= step
        if remaining <= 0.0:
            break
    return p + sigma * s, sigma * u


def tick(ctrl: ControllerState, dt: float) -> tuple[ControllerState, JointState]:
    """Advance dt seconds toward the target under the velocity/acceleration limits."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n = len(ctrl.position)
    pos = np.empty(n)
    vel = np.empty(n)
    for j in range(n):
        pos[j], vel[j] = _advance_joint(
            float(ctrl.position[j]), float(ctrl.velocity[j]), float(ctrl.target[j]),
            float(ctrl.max_velocity[j]), float(ctrl.max_acceleration[j]), dt)
    new = replace(ctrl, position=pos, velocity=vel, time=ctrl.time + dt)
    return new, new.current


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped joint states with strictly increasing timestamps."""

    times: tuple[float, ...] = ()
    states: tuple[np.ndarray, ...] = ()

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.times, self.states))


def record(traj: Trajectory, t: float, state: JointState) -> Trajectory:
    """Append a sample; timestamps must strictly increase."""
    if traj.times and t <= traj.times[-1]:
        raise TrajectoryError(
            f"non-monotone trajectory timestamp {t} after {traj.times[-1]}")
    return Trajectory(traj.times + (float(t),), traj.states + (state.angles.copy(),))


def replay(traj: Trajectory, ctrl: ControllerState, rate: float,
           settle_ticks: int = 100_000) -> list[tuple[JointState, JointState]]:
    """Feed a recorded trajectory through the controller at a fixed tick rate.

    Each tick retargets to the latest recorded sample whose timestamp has
    passed (zero-order hold) and advances the controller; after the last
    sample the controller runs on until it arrives. Velocity and acceleration
    limits hold even when the recording violated them. Returns
    (command, state) pairs per tick.
    """
    if len(traj) == 0:
        raise TrajectoryError("cannot replay an empty trajectory")
    if rate <= 0:
        raise ValueError("rate must be positive")
    dt = 1.0 / rate
    t0 = traj.times[0]
    out: list[tuple[JointState, JointState]] = []
    cursor = -1
    elapsed = 0.0
    ticks_after_end = 0
    while True:
        while cursor + 1 < len(traj) and traj.times[cursor + 1] - t0 <= elapsed:
            cursor += 1
            ctrl = set_target(ctrl, JointState(
                np.clip(traj.states[cursor], ctrl.lower, ctrl.upper), traj.times[cursor]))
        ctrl, state = tick(ctrl, dt)
        elapsed += dt
        out.append((JointState(ctrl.target.copy(), state.timestamp), state))
        if cursor == len(traj) - 1:
            ticks_after_end += 1
            if ctrl.arrived:
                break
            if ticks_after_end > settle_ticks:
                raise TrajectoryError("replay failed to settle on the final sample")
    return out
