"""Serial revolute kinematic chains: document parsing and forward kinematics.

Chain documents are JSON: ``{name, links: [...], joints: [...]}`` with joints
ordered (or orderable) base to tip. Angles are radians, lengths meters, and
``rpy`` is fixed-axis roll-pitch-yaw applied about world x, y, z in order.
Link meshes are referenced by path relative to the document. An optional
``end_effector: {xyz, rpy}`` block gives a fixed offset from the tip link
frame to the end-effector frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ChainFormatError, ChainValidationError
from .geometry import RigidTransform, Vec3, quat_from_axis_angle, quat_from_rpy, quat_rotate
from .meshes import TriangleMesh, load_mesh

AXIS_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Joint:
    name: str
    parent_link: str
    child_link: str
    origin: RigidTransform  # fixed offset from the parent link frame
    axis: Vec3              # unit, in the joint's local frame
    lower: float
    upper: float
    max_velocity: float
    max_acceleration: float

    @property
    def limits(self) -> tuple[float, float]:
        return (self.lower, self.upper)


@dataclass(frozen=True)
class Link:
    name: str
    visual_mesh: Optional[TriangleMesh] = None
    collision_mesh: Optional[TriangleMesh] = None


@dataclass(frozen=True)
class KinematicChain:
    name: str
    links: tuple[Link, ...]    # ordered base to tip; links[i+1] is joints[i].child
    joints: tuple[Joint, ...]  # ordered base to tip
    ee_offset: RigidTransform = field(default_factory=RigidTransform.identity)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def link_index(self, name: str) -> int:
        for i, link in enumerate(self.links):
            if link.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class JointState:
    angles: np.ndarray  # (n_joints,) radians
    timestamp: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1:
            raise ValueError(f"angles must be a vector, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("joint angles must be finite")
        object.__setattr__(self, "angles", a)


def _get(obj: dict, key: str, where: str):
    if key not in obj:
        raise ChainFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _vec(value, where: str, n: int = 3) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ChainFormatError(f"{where}: expected {n} numbers, got {value!r}")
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ChainFormatError(f"{where}: expected {n} finite numbers, got {value!r}")
    return v


def _origin(obj: dict, where: str) -> RigidTransform:
    xyz = _vec(obj.get("xyz", (0.0, 0.0, 0.0)), f"{where}.xyz")
    rpy = _vec(obj.get("rpy", (0.0, 0.0, 0.0)), f"{where}.rpy")
    return RigidTransform(quat_from_rpy(*rpy), xyz)


def parse_chain(text: str, mesh_dir=None) -> KinematicChain:
    """Parse and validate a chain document.

    mesh_dir resolves relative mesh paths; link meshes are skipped when it is
    None and the document references none.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChainFormatError(f"chain document: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise ChainFormatError("chain document: top level must be an object")

    name = doc.get("name", "chain")
    links_doc = _get(doc, "links", "chain document")
    joints_doc = _get(doc, "joints", "chain document")
    if not links_doc or not joints_doc:
        raise ChainValidationError("chain needs at least one link and one joint")

    links: dict[str, Link] = {}
    for i, ld in enumerate(links_doc):
        where = f"links[{i}]"
        lname = _get(ld, "name", where)
        if lname in links:
            raise ChainValidationError(f"duplicate link name {lname!r}")
        meshes = {}
        for kind in ("visual_mesh", "collision_mesh"):
            rel = ld.get(kind)
            if rel is None:
                meshes[kind] = None
                continue
            path = Path(rel)
            if not path.is_absolute():
                path = (Path(mesh_dir) if mesh_dir is not None else Path(".")) / path
            try:
                meshes[kind] = load_mesh(path)
            except OSError as e:
                raise ChainFormatError(f"{where}.{kind}: cannot read {path}: {e}")
        links[lname] = Link(lname, meshes["visual_mesh"], meshes["collision_mesh"])

    joints: list[Joint] = []
    seen_joint_names = set()
    for i, jd in enumerate(joints_doc):
        where = f"joints[{i}]"
        jname = _get(jd, "name", where)
        if jname in seen_joint_names:
            raise ChainValidationError(f"duplicate joint name {jname!r}")
        seen_joint_names.add(jname)
        jtype = jd.get("type", "revolute")
        if jtype != "revolute":
            raise ChainValidationError(f"{where} ({jname}): joint type {jtype!r} not supported; only revolute")
        parent = _get(jd, "parent", where)
        child = _get(jd, "child", where)
        for side, link_name in (("parent", parent), ("child", child)):
            if link_name not in links:
                raise ChainValidationError(f"{where} ({jname}): {side} link {link_name!r} not defined")
        axis = _vec(_get(jd, "axis", where), f"{where}.axis")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_UNIT_TOL:
            raise ChainValidationError(
                f"{where} ({jname}): non-unit axis {axis.tolist()} (norm {np.linalg.norm(axis)!r})")
        limits = _get(jd, "limits", where)
        lower = float(_get(limits, "lower", f"{where}.limits"))
        upper = float(_get(limits, "upper", f"{where}.limits"))
        if lower > upper:
            raise ChainValidationError(f"{where} ({jname}): lower limit {lower} > upper limit {upper}")
        max_v = float(_get(jd, "max_velocity", where))
        max_a = float(_get(jd, "max_acceleration", where))
        if max_v <= 0 or max_a <= 0:
            raise ChainValidationError(f"{where} ({jname}): max_velocity/max_acceleration must be positive")
        joints.append(Joint(jname, parent, child,
                            _origin(jd.get("origin", {}), f"{where}.origin"),
                            axis, lower, upper, max_v, max_a))

    # Serial-chain check: exactly one base link, every other link the child of
    # exactly one joint, no branching.
    children = {j.child_link for j in joints}
    if len(children) != len(joints):
        raise ChainValidationError("two joints share a child link (chain must be serial)")
    bases = [l for l in links if l not in children]
    if len(bases) != 1:
        raise ChainValidationError(f"expected exactly one base link, found {bases!r}")

    by_parent: dict[str, Joint] = {}
    for j in joints:
        if j.parent_link in by_parent:
            raise ChainValidationError(f"link {j.parent_link!r} has two child joints (chain must be serial)")
        by_parent[j.parent_link] = j

    ordered_joints: list[Joint] = []
    ordered_links: list[Link] = [links[bases[0]]]
    cursor = bases[0]
    while cursor in by_parent:
        j = by_parent[cursor]
        ordered_joints.append(j)
        ordered_links.append(links[j.child_link])
        cursor = j.child_link
    if len(ordered_joints) != len(joints):
        raise ChainValidationError("joints do not form a single connected serial chain")
    if len(ordered_links) != len(links):
        unreached = set(links) - {l.name for l in ordered_links}
        raise ChainValidationError(f"links not connected to the chain: {sorted(unreached)}")

    ee_offset = RigidTransform.identity()
    if "end_effector" in doc:
        ee_offset = _origin(doc["end_effector"], "end_effector")

    return KinematicChain(name, tuple(ordered_links), tuple(ordered_joints), ee_offset)


def load_chain(path) -> KinematicChain:
    """Read a chain document from disk, resolving mesh paths next to it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ChainFormatError(f"cannot read chain document {path}: {e}")
    return parse_chain(text, mesh_dir=path.parent)


def _check_state(chain: KinematicChain, state: JointState) -> None:
    if len(state.angles) != chain.n_joints:
        raise ValueError(
            f"state has {len(state.angles)} angles, chain has {chain.n_joints} joints")


def forward_kinematics(chain: KinematicChain, state: JointState) -> list[RigidTransform]:
    """World pose of every link (base first) plus the end-effector pose.

    Returns n_links + 1 transforms; the last entry is the tip link pose
    composed with the chain's fixed end-effector offset.
    """
    _check_state(chain, state)
    poses = [RigidTransform.identity()]
    for j, joint in enumerate(chain.joints):
        spin = RigidTransform(quat_from_axis_angle(joint.axis, state.angles[j]), np.zeros(3))
        poses.append(poses[-1] @ joint.origin @ spin)
    poses.append(poses[-1] @ chain.ee_offset)
    return poses


def end_effector_pose(chain: KinematicChain, state: JointState) -> RigidTransform:
    return forward_kinematics(chain, state)[-1]


def joint_world_frame(chain: KinematicChain, state: JointState, j: int) -> tuple[Vec3, Vec3]:
    """World-frame origin and unit rotation axis of joint j.

    Both depend only on joints 0..j-1; joint j's own angle spins its child
    link, not its own axis.
    """
    _check_state(chain, state)
    if not 0 <= j < chain.n_joints:
        raise IndexError(f"joint index {j} out of range for {chain.n_joints} joints")
    pose = RigidTransform.identity()
    for k in range(j):
        joint = chain.joints[k]
        spin = RigidTransform(quat_from_axis_angle(joint.axis, state.angles[k]), np.zeros(3))
        pose = pose @ joint.origin @ spin
    frame = pose @ chain.joints[j].origin
    return frame.translation, quat_rotate(frame.rotation, chain.joints[j].axis)


def clamped_zero_state(chain: KinematicChain, timestamp: float = 0.0) -> JointState:
    """All-zero state clamped into the joint limits (initial session state)."""
    angles = np.array([min(max(0.0, j.lower), j.upper) for j in chain.joints])
    return JointState(angles, timestamp)


def state_within_limits(chain: KinematicChain, state: JointState, tol: float = 0.0) -> bool:
    _check_state(chain, state)
    for theta, joint in zip(state.angles, chain.joints):
        if theta < joint.lower - tol or theta > joint.upper + tol:
            return False
    return True
