"""Session orchestration over the wire protocol.

A Session owns one chain, one guidance engine and one controller, and is
driven by two inputs only: validated wire messages (processed strictly in
arrival order) and clock ticks. All handlers return the outbound messages to
send; they never raise for bad input, they answer with an error message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fileio
from .controller import ControllerState, Trajectory, record, set_target, tick
from .errors import (EmptySceneError, HandguideError, ProtocolError,
                     StaleSampleError, TargetLimitError, TrajectoryError)
from .geometry import RigidTransform, quat_from_axis_angle
from .guidance import GuidanceConfig, GuidanceEngine, HandSample
from .kinematics import KinematicChain, JointState, clamped_zero_state, load_chain
from .meshes import read_point_cloud
from .protocol import validate_inbound, validate_outbound
from .registration import (IcpConfig, SeedPose, crop_scene, icp_register,
                           mls_smooth, model_cloud_from_chain)

MODES = ("idle", "link_guidance", "ee_drag", "replay")
MODEL_CLOUD_SAMPLES = 16_000


def _state_msg(t: float, angles) -> dict:
    return {"type": "state", "t": float(t), "angles": [float(a) for a in angles]}


def _target_msg(t: float, angles, touched, residual) -> dict:
    return {"type": "target", "t": float(t), "angles": [float(a) for a in angles],
            "touched": [int(j) for j in touched],
            "residual": [float(r) for r in residual]}


def _pose_msg(pose: RigidTransform) -> dict:
    return {"pos": [float(v) for v in pose.translation],
            "quat": [float(v) for v in pose.rotation]}


@dataclass
class Session:
    """Single-writer session state; handle_message and tick_clock mutate it."""

    config: GuidanceConfig = field(default_factory=GuidanceConfig)
    icp_config: IcpConfig = field(default_factory=IcpConfig)
    rng_seed: int = 0
    chain: Optional[KinematicChain] = None
    engine: Optional[GuidanceEngine] = None
    ctrl: Optional[ControllerState] = None
    mode: str = "idle"
    recording: bool = False
    record_buffer: Trajectory = field(default_factory=Trajectory)
    world_to_robot: RigidTransform = field(default_factory=RigidTransform.identity)
    clock_t: float = 0.0
    last_highlight: Optional[int] = None
    _replay_traj: Optional[Trajectory] = None
    _replay_cursor: int = -1
    _replay_started: float = 0.0

    # -- message plumbing ---------------------------------------------------

    def handle_message(self, message: dict) -> list[dict]:
        try:
            validate_inbound(message)
        except ProtocolError as e:
            return self._emit([{"type": "error", "msg": str(e)}])
        handler = getattr(self, f"_on_{message['type']}")
        try:
            out = handler(message)
        except HandguideError as e:
            out = [{"type": "error", "msg": str(e)}]
        return self._emit(out)

    def _emit(self, messages: list[dict]) -> list[dict]:
        for m in messages:
            validate_outbound(m)
        return messages

    def _require_chain(self) -> KinematicChain:
        if self.chain is None:
            raise ProtocolError("no chain loaded")
        return self.chain

    # -- inbound handlers ---------------------------------------------------

    def _on_load_chain(self, msg: dict) -> list[dict]:
        chain = load_chain(msg["path"])
        self.chain = chain
        state = clamped_zero_state(chain, self.clock_t)
        self.engine = GuidanceEngine(chain, self.config, state)
        self.ctrl = ControllerState.from_chain(chain, state)
        self.mode = "idle"
        self.recording = False
        self.record_buffer = Trajectory()
        self.world_to_robot = RigidTransform.identity()
        self.last_highlight = None
        self._replay_traj = None
        return [self._chain_msg(), _state_msg(self.clock_t, state.angles)]

    def _chain_msg(self) -> dict:
        chain = self._require_chain()
        links = []
        for link in chain.links:
            mesh = link.visual_mesh or link.collision_mesh
            links.append({
                "name": link.name,
                "mesh": None if mesh is None else {
                    "vertices": [[float(v) for v in row] for row in mesh.vertices],
                    "triangles": [[int(i) for i in row] for row in mesh.triangles],
                },
            })
        joints = [{
            "name": j.name,
            "origin_pos": [float(v) for v in j.origin.translation],
            "origin_quat": [float(v) for v in j.origin.rotation],
            "axis": [float(v) for v in j.axis],
            "lower": j.lower, "upper": j.upper,
        } for j in chain.joints]
        return {"type": "chain", "name": chain.name, "links": links,
                "joints": joints,
                "ee_offset_pos": [float(v) for v in chain.ee_offset.translation],
                "ee_offset_quat": [float(v) for v in chain.ee_offset.rotation],
                "angles": [float(a) for a in self.engine.state.angles]}

    def _on_mode(self, msg: dict) -> list[dict]:
        self._require_chain()
        value = msg["value"]
        if value == "replay" and self._replay_traj is None:
            raise ProtocolError("cannot enter replay mode without a loaded trajectory")
        if value != self.mode and self.engine is not None:
            self.engine.release()
        self.mode = value
        return []

    def _on_set_config(self, msg: dict) -> list[dict]:
        cfg = self.config
        self.config = GuidanceConfig(
            motion_scale=msg.get("k", cfg.motion_scale),
            active_zone_scale=msg.get("zone_scale", cfg.active_zone_scale),
            propagation_tolerance=cfg.propagation_tolerance,
            collinearity_tolerance=cfg.collinearity_tolerance,
            smoothing_window=cfg.smoothing_window)
        if self.engine is not None:
            self.engine.set_config(self.config)
        return []

    def handle_hand_sample(self, sample: HandSample) -> list[dict]:
        """Route one tracked-hand sample through guidance and retarget."""
        chain = self._require_chain()
        if self.mode != "link_guidance":
            raise ProtocolError(f"hand samples need link_guidance mode (now {self.mode!r})")
        local = self.world_to_robot.apply(sample.position)
        try:
            result = self.engine.process(
                HandSample(local, sample.timestamp, sample.grasping))
        except StaleSampleError as e:
            return [{"type": "error", "msg": f"dropped hand sample: {e}"}]
        out: list[dict] = []
        if result.highlight != self.last_highlight:
            self.last_highlight = result.highlight
            out.append({"type": "highlight",
                        "link": None if result.highlight is None else int(result.highlight)})
        if result.emit_target:
            self.ctrl = set_target(self.ctrl, result.state)
            residual = result.update.residual if result.update is not None else np.zeros(3)
            touched = result.update.touched_joints if result.update is not None else ()
            out.append(_target_msg(sample.timestamp, result.state.angles,
                                   touched, residual))
        return out

    def _on_hand(self, msg: dict) -> list[dict]:
        return self.handle_hand_sample(
            HandSample(np.asarray(msg["pos"], dtype=float), float(msg["t"]), msg["grasp"]))

    def _on_drag_ee(self, msg: dict) -> list[dict]:
        from .ik import drag_end_effector
        chain = self._require_chain()
        if self.mode != "ee_drag":
            raise ProtocolError(f"drag_ee needs ee_drag mode (now {self.mode!r})")
        pose_scene = RigidTransform(np.asarray(msg["pose"]["quat"], dtype=float),
                                    np.asarray(msg["pose"]["pos"], dtype=float))
        target = self.world_to_robot @ pose_scene
        update = drag_end_effector(chain, self.engine.state, target, self.config)
        self.engine.state = update.new_state
        self.ctrl = set_target(self.ctrl, update.new_state)
        return [_target_msg(self.clock_t, update.new_state.angles,
                            update.touched_joints, update.residual)]

    def handle_registration_request(self, scene: np.ndarray, seed: SeedPose) -> list[dict]:
        """Crop, smooth and register; adopt the transform only on convergence."""
        chain = self._require_chain()
        model = model_cloud_from_chain(chain, self.engine.state,
                                       MODEL_CLOUD_SAMPLES, self.rng_seed)
        cropped = crop_scene(scene, seed)
        smoothed = mls_smooth(cropped, self.icp_config.mls_radius)
        result = icp_register(model, smoothed, seed, self.icp_config)
        if result.converged:
            self.world_to_robot = result.pose.inverse()
        return [{"type": "registration", "pose": _pose_msg(result.pose),
                 "rms": result.rms, "converged": result.converged,
                 "inlier_fraction": result.inlier_fraction}]

    def _on_register(self, msg: dict) -> list[dict]:
        if "points" in msg:
            scene = np.asarray(msg["points"], dtype=float)
        else:
            scene = read_point_cloud(msg["scene_path"])
        seed_doc = msg["seed"]
        pose = RigidTransform(
            quat_from_axis_angle((0.0, 0.0, 1.0), float(seed_doc["yaw"])),
            np.asarray(seed_doc["pos"], dtype=float))
        seed = SeedPose(pose, float(seed_doc.get("crop_radius", 2.5)))
        return self.handle_registration_request(scene, seed)

    def _on_record(self, msg: dict) -> list[dict]:
        self._require_chain()
        if msg["on"]:
            self.recording = True
            self.record_buffer = Trajectory()
            return []
        self.recording = False
        if "path" in msg and len(self.record_buffer):
            fileio.write_trajectory(msg["path"], self.record_buffer)
        return []

    def _on_replay(self, msg: dict) -> list[dict]:
        self._require_chain()
        traj = fileio.read_trajectory(msg["path"])
        for angles in traj.states:
            if len(angles) != self.chain.n_joints:
                raise TrajectoryError(
                    f"trajectory has {len(angles)} joints, chain has {self.chain.n_joints}")
        self._replay_traj = traj
        self._replay_cursor = -1
        self._replay_started = self.clock_t
        if self.engine is not None:
            self.engine.release()
        self.mode = "replay"
        return []

    # -- clock --------------------------------------------------------------

    def tick_clock(self, dt: float) -> list[dict]:
        """Advance the controller one tick and broadcast the resulting state."""
        if self.ctrl is None:
            self.clock_t += dt
            return []
        if self.mode == "replay" and self._replay_traj is not None:
            traj = self._replay_traj
            elapsed = self.clock_t - self._replay_started
            t0 = traj.times[0]
            while (self._replay_cursor + 1 < len(traj)
                   and traj.times[self._replay_cursor + 1] - t0 <= elapsed):
                self._replay_cursor += 1
                target = np.clip(traj.states[self._replay_cursor],
                                 self.ctrl.lower, self.ctrl.upper)
                self.ctrl = set_target(self.ctrl, JointState(
                    target, traj.times[self._replay_cursor]))
                self.engine.state = JointState(target, self.clock_t)
            if self._replay_cursor == len(traj) - 1 and self.ctrl.arrived:
                self.mode = "idle"
        self.ctrl, state = tick(self.ctrl, dt)
        self.clock_t = self.ctrl.time
        if self.recording:
            self.record_buffer = record(self.record_buffer, self.clock_t, state)
        return self._emit([_state_msg(self.clock_t, state.angles)])

    def invariants_ok(self) -> bool:
        """Mode/limits/recording invariants; the fuzz harness asserts this."""
        if self.mode not in MODES:
            return False
        if self.record_buffer.times and any(
                b <= a for a, b in zip(self.record_buffer.times,
                                       self.record_buffer.times[1:])):
            return False
        if self.ctrl is not None:
            if np.any(self.ctrl.position < self.ctrl.lower - 1e-12):
                return False
            if np.any(self.ctrl.position > self.ctrl.upper + 1e-12):
                return False
        if self.mode == "replay" and self._replay_traj is None:
            return False
        return True


def run_clock(session: Session, rate: float, duration: float) -> list[dict]:
    """Drive the session clock at a fixed rate for a duration (virtual time)."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    out: list[dict] = []
    dt = 1.0 / rate
    for _ in range(int(round(duration * rate))):
        out.extend(session.tick_clock(dt))
    return out
