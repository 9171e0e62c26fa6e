"""Quaternion and rigid-transform primitives shared across the package.

Vectors are float64 numpy arrays of shape (3,); quaternions of shape (4,)
in [w, x, y, z] order. Rotations follow the right-hand rule about unit axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Vec3 = np.ndarray
Quat = np.ndarray


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([float(x), float(y), float(z)])


def quat_identity() -> Quat:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q) -> Quat:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    return q / n


def quat_from_axis_angle(axis, angle: float) -> Quat:
    """Unit quaternion (cos(angle/2), sin(angle/2)*axis), renormalized.

    The axis is expected to be unit length; the trailing normalization only
    soaks up floating-point drift.
    """
    axis = np.asarray(axis, dtype=float)
    half = 0.5 * float(angle)
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = np.sin(half) * axis
    return quat_normalize(q)


def quat_multiply(a, b) -> Quat:
    """Hamilton product a*b (apply b's rotation first, then a's)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> Quat:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> Vec3:
    """Rotate vector v by unit quaternion q (q * (0,v) * q^-1)."""
    qv = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m) -> Quat:
    """Unit quaternion from a proper rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> Quat:
    """Fixed-axis roll-pitch-yaw (about world x, then y, then z)."""
    qx = quat_from_axis_angle((1.0, 0.0, 0.0), roll)
    qy = quat_from_axis_angle((0.0, 1.0, 0.0), pitch)
    qz = quat_from_axis_angle((0.0, 0.0, 1.0), yaw)
    return quat_multiply(qz, quat_multiply(qy, qx))


def rotation_vector(q) -> Vec3:
    """Axis-angle vector (axis * angle, angle in [0, pi]) of a unit quaternion."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0.0:
        q = -q
    s = np.linalg.norm(q[1:])
    if s < 1e-12:
        return 2.0 * q[1:]  # small-angle limit: v ~ 2 * vector part
    angle = 2.0 * np.arctan2(s, q[0])
    return q[1:] / s * angle


@dataclass(frozen=True)
class RigidTransform:
    """Rotation-then-translation map p -> R(p) + t."""

    rotation: Quat = field(default_factory=quat_identity)
    translation: Vec3 = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", quat_normalize(self.rotation))
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError(f"bad translation {self.translation!r}")
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    def apply(self, point) -> Vec3:
        return quat_rotate(self.rotation, point) + self.translation

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points."""
        pts = np.asarray(points, dtype=float)
        return pts @ quat_to_matrix(self.rotation).T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other: (self @ other).apply(p) == self.apply(other.apply(p))."""
        return RigidTransform(
            quat_multiply(self.rotation, other.rotation),
            quat_rotate(self.rotation, other.translation) + self.translation,
        )

    __matmul__ = compose

    def inverse(self) -> "RigidTransform":
        qc = quat_conjugate(self.rotation)
        return RigidTransform(qc, -quat_rotate(qc, self.translation))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    @staticmethod
    def from_matrix(m) -> "RigidTransform":
        m = np.asarray(m, dtype=float)
        return RigidTransform(quat_from_matrix(m[:3, :3]), m[:3, 3].copy())
