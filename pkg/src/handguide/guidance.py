"""Hand-motion to joint-command conversion.

Per frame, the tracked hand position and its previous position are projected
onto the rotation plane of the grabbed link's parent joint; the swept angle
(scaled by a motion factor and gated by the joint limits) becomes that
joint's update. The previous hand point is then rotated by the applied
amount and the still-unreproduced motion is offered to the next joint toward
the base, until the motion is fully reproduced or joints run out. Whatever
remains is reported as the residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import DegenerateRadiusError, StaleSampleError
from .geometry import Vec3, quat_from_axis_angle, quat_rotate
from .kinematics import JointState, KinematicChain, forward_kinematics, joint_world_frame

FLAT_HULL_THICKNESS = 1e-6


@dataclass(frozen=True)
class HandSample:
    position: Vec3      # meters, world frame
    timestamp: float    # seconds, strictly increasing within a stream
    grasping: bool      # hold-gesture stand-in

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError(f"bad hand position {self.position!r}")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class GuidanceConfig:
    """Tuning knobs for the per-frame decomposition.

    motion_scale values above 2 can overshoot: the working point's angular
    error about a joint scales by |1 - motion_scale| per step, so residuals
    are only guaranteed non-increasing for motion_scale in (0, 2].
    """

    motion_scale: float = 1.0          # K: applied joint delta per unit hand angle
    active_zone_scale: float = 1.5     # convex-hull inflation factor
    propagation_tolerance: float = 1e-6   # meters; stop when residual is below
    collinearity_tolerance: float = 1e-6  # meters; skip joints the hand sits on
    smoothing_window: int = 1          # moving-average width over hand samples; 1 = off

    def __post_init__(self):
        if self.motion_scale <= 0:
            raise ValueError("motion_scale must be positive")
        if self.active_zone_scale < 1:
            raise ValueError("active_zone_scale must be >= 1")
        if not (0 < self.propagation_tolerance < 1):
            raise ValueError("propagation_tolerance must be in (0, 1)")
        if not (0 < self.collinearity_tolerance < 1):
            raise ValueError("collinearity_tolerance must be in (0, 1)")
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be >= 1")


@dataclass(frozen=True)
class AppliedRotation:
    """One joint's contribution within a frame, in application order."""

    joint: int
    origin: Vec3
    axis: Vec3
    angle: float


@dataclass(frozen=True)
class GuidanceUpdate:
    new_state: JointState
    residual: Vec3  # hand motion left unreproduced (target minus reached point)
    touched_joints: tuple[int, ...]
    steps: tuple[AppliedRotation, ...] = ()


class LinkZone:
    """Convex hull of one link's world-frame collision vertices, inflated
    about its centroid by a scale factor."""

    def __init__(self, points: np.ndarray, scale: float):
        pts = np.asarray(points, dtype=float)
        pts = _inflate_degenerate(pts)
        hull = ConvexHull(pts)
        self.scale = float(scale)
        self.centroid = pts[hull.vertices].mean(axis=0)
        self.equations = hull.equations  # rows [nx, ny, nz, offset], inside <= 0
        self.vertices = pts[hull.vertices]

    def contains(self, p, tol: float = 1e-9) -> bool:
        # Membership in the scaled hull == membership of the unscaled point
        # in the original hull.
        q = self.centroid + (np.asarray(p, dtype=float) - self.centroid) / self.scale
        return bool(np.all(self.equations[:, :3] @ q + self.equations[:, 3] <= tol))

    def scaled_vertices(self) -> np.ndarray:
        return self.centroid + (self.vertices - self.centroid) * self.scale


def _inflate_degenerate(pts: np.ndarray) -> np.ndarray:
    """Pad flat (rank-deficient) vertex sets to a thin solid so qhull and
    containment stay well-defined."""
    center = pts.mean(axis=0)
    centered = pts - center
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    svals = np.concatenate([svals, np.zeros(3 - len(svals))])
    thin = [vt[i] for i in range(3) if svals[i] < FLAT_HULL_THICKNESS]
    if not thin:
        return pts
    out = [pts]
    for direction in thin:
        out = [p + s * FLAT_HULL_THICKNESS * direction for p in out for s in (-1.0, 1.0)]
    return np.vstack(out)


@dataclass(frozen=True)
class ActiveZone:
    """Per-link hand-activation volumes; None where a link has no collision mesh."""

    zones: tuple[Optional[LinkZone], ...]
    scale: float


def build_active_zone(chain: KinematicChain, state: JointState, scale: float) -> ActiveZone:
    if scale < 1:
        raise ValueError("active zone scale must be >= 1")
    poses = forward_kinematics(chain, state)
    zones: list[Optional[LinkZone]] = []
    for i, link in enumerate(chain.links):
        if link.collision_mesh is None:
            zones.append(None)
            continue
        world = poses[i].apply_points(link.collision_mesh.vertices)
        try:
            zones.append(LinkZone(world, scale))
        except QhullError:
            zones.append(None)  # fewer than 2 distinct points; no usable volume
    return ActiveZone(tuple(zones), float(scale))


def active_link(chain: KinematicChain, state: JointState, zones: ActiveZone, p) -> Optional[int]:
    """Innermost (closest-to-tip) link whose inflated hull contains p, if any."""
    for i in range(len(zones.zones) - 1, -1, -1):
        zone = zones.zones[i]
        if zone is not None and zone.contains(p):
            return i
    return None


def project_onto_joint_plane(h, s, a) -> Vec3:
    """Project a point onto the plane through s perpendicular to the unit axis a."""
    h = np.asarray(h, dtype=float)
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    rel = h - s
    return h - np.dot(rel, a) * a


def projection_vector(p, s, tolerance: float = 1e-6) -> Vec3:
    """Unit vector from the joint origin s to the projected point p."""
    d = np.asarray(p, dtype=float) - np.asarray(s, dtype=float)
    n = np.linalg.norm(d)
    if n <= tolerance:
        raise DegenerateRadiusError(
            f"projected point within {tolerance} m of the joint axis (radius {n})")
    return d / n


COLLINEAR_TRIPLE_EPS = 1e-12


def joint_angle_delta(v_prev, v_cur, a) -> float:
    """Signed angle from v_prev to v_cur about the axis a (right-hand rule).

    Both vectors must be unit length; the dot product is clamped against
    floating-point overshoot. Collinear vectors give exactly 0: with exact
    arithmetic the cross product vanishes there, so triple products below
    COLLINEAR_TRIPLE_EPS are treated as the zero sign rather than letting
    arccos amplify rounding noise into a phantom rotation.
    """
    v_prev = np.asarray(v_prev, dtype=float)
    v_cur = np.asarray(v_cur, dtype=float)
    triple = float(np.dot(a, np.cross(v_prev, v_cur)))
    if abs(triple) < COLLINEAR_TRIPLE_EPS:
        return 0.0
    dot = float(np.clip(np.dot(v_prev, v_cur), -1.0, 1.0))
    return float(np.arccos(dot) * np.sign(triple))


def apply_angle_update(theta_prev: float, delta: float, k: float,
                       limits: tuple[float, float]) -> float:
    """Scaled angle update, gated (not clamped) by the joint limits.

    A candidate outside the limits leaves the angle unchanged entirely, so
    the motion falls through to the next joint instead of saturating here.
    """
    lower, upper = limits
    candidate = theta_prev + k * delta
    if lower <= candidate <= upper:
        return candidate
    return theta_prev


def rotate_about_joint(point, s, a, angle: float) -> Vec3:
    """Rotate a point about the axis (s, a) by the given angle.

    Implemented with the unit quaternion (cos(angle/2), sin(angle/2)*a);
    distance to the axis is preserved.
    """
    q = quat_from_axis_angle(a, angle)
    s = np.asarray(s, dtype=float)
    return quat_rotate(q, np.asarray(point, dtype=float) - s) + s


def propagate_hand_motion(chain: KinematicChain, state: JointState, start_link: int,
                          h_prev, h_cur, cfg: GuidanceConfig) -> GuidanceUpdate:
    """Distribute one frame of hand motion over the grabbed link's ancestor joints.

    Starting at the parent joint of start_link and walking toward the base,
    each joint absorbs the in-plane component of the remaining motion; the
    working previous-hand point is rotated by the applied amount before the
    next joint is considered. Limited or degenerate joints contribute zero
    and pass the motion along. Stops early once the remaining motion is
    within the propagation tolerance.
    """
    if not 1 <= start_link < len(chain.links):
        raise IndexError(f"start_link {start_link} has no parent joint "
                         f"(chain has {len(chain.links)} links)")
    h_cur = np.asarray(h_cur, dtype=float)
    angles = state.angles.copy()
    r = np.asarray(h_prev, dtype=float)
    touched: list[int] = []
    steps: list[AppliedRotation] = []

    for j in range(start_link - 1, -1, -1):
        if np.linalg.norm(r - h_cur) <= cfg.propagation_tolerance:
            break
        s, a = joint_world_frame(chain, replace(state, angles=angles), j)
        p_prev = project_onto_joint_plane(r, s, a)
        p_cur = project_onto_joint_plane(h_cur, s, a)
        try:
            v_prev = projection_vector(p_prev, s, cfg.collinearity_tolerance)
            v_cur = projection_vector(p_cur, s, cfg.collinearity_tolerance)
        except DegenerateRadiusError:
            continue  # hand on the joint axis: the angle is unobservable
        delta = joint_angle_delta(v_prev, v_cur, a)
        new_angle = apply_angle_update(angles[j], delta, cfg.motion_scale,
                                       chain.joints[j].limits)
        applied = new_angle - angles[j]
        if applied == 0.0:
            continue
        angles[j] = new_angle
        touched.append(j)
        steps.append(AppliedRotation(j, s, a, applied))
        r = rotate_about_joint(r, s, a, applied)

    return GuidanceUpdate(
        new_state=JointState(angles, state.timestamp),
        residual=h_cur - r,
        touched_joints=tuple(touched),
        steps=tuple(steps),
    )


@dataclass
class EngineResult:
    state: JointState
    update: Optional[GuidanceUpdate]
    highlight: Optional[int]   # link to highlight, if any
    moved: bool
    emit_target: bool = False  # true for grasping samples steering a held link


class GuidanceEngine:
    """Stateful per-session driver turning a hand-sample stream into targets.

    The grabbed link is locked when a grasp starts (first grasping sample
    after a non-grasping one) and released when the grasp ends; while locked,
    consecutive grasping samples feed the propagation. The same engine backs
    the offline CLI path and the live service so the two stay equivalent.
    """

    def __init__(self, chain: KinematicChain, config: GuidanceConfig,
                 initial_state: Optional[JointState] = None):
        from .kinematics import clamped_zero_state
        self.chain = chain
        self.config = config
        self.state = initial_state if initial_state is not None else clamped_zero_state(chain)
        self._last_t: Optional[float] = None
        self._grasping = False
        self._hold_link: Optional[int] = None
        self._h_prev: Optional[np.ndarray] = None
        self._window: list[np.ndarray] = []
        self._zones: Optional[ActiveZone] = None
        self._zones_key: Optional[tuple] = None

    def set_config(self, config: GuidanceConfig) -> None:
        self.config = config
        self._zones_key = None
        self._window.clear()

    def release(self) -> None:
        """Drop any in-progress grasp (mode switches, registration jumps)."""
        self._grasping = False
        self._hold_link = None
        self._h_prev = None
        self._window.clear()

    def _current_zones(self) -> ActiveZone:
        key = (tuple(self.state.angles), self.config.active_zone_scale)
        if self._zones_key != key:
            self._zones = build_active_zone(self.chain, self.state,
                                            self.config.active_zone_scale)
            self._zones_key = key
        return self._zones

    def _smoothed(self, position: np.ndarray) -> np.ndarray:
        if self.config.smoothing_window <= 1:
            return position
        self._window.append(position)
        del self._window[:-self.config.smoothing_window]
        return np.mean(self._window, axis=0)

    def process(self, sample: HandSample) -> EngineResult:
        if self._last_t is not None and sample.timestamp <= self._last_t:
            raise StaleSampleError(
                f"hand sample at t={sample.timestamp} not after t={self._last_t}")
        self._last_t = sample.timestamp
        pos = self._smoothed(sample.position)

        if not sample.grasping:
            self._grasping = False
            self._hold_link = None
            self._h_prev = None
            highlight = active_link(self.chain, self.state, self._current_zones(), pos)
            return EngineResult(self.state, None, highlight, False)

        if not self._grasping:
            # grasp start: lock onto whatever link the hand is inside now
            self._grasping = True
            self._hold_link = active_link(self.chain, self.state, self._current_zones(), pos)
            self._h_prev = pos
            return EngineResult(self.state, None, self._hold_link, False,
                                emit_target=self._steerable())

        update = None
        moved = False
        if self._steerable():
            update = propagate_hand_motion(self.chain, self.state, self._hold_link,
                                           self._h_prev, pos, self.config)
            update = replace(update, new_state=JointState(update.new_state.angles,
                                                          sample.timestamp))
            moved = bool(update.touched_joints)
            self.state = update.new_state
        self._h_prev = pos
        return EngineResult(self.state, update, self._hold_link, moved,
                            emit_target=self._steerable())

    def _steerable(self) -> bool:
        return self._hold_link is not None and self._hold_link >= 1
