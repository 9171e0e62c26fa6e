"""Seed-initialized registration of the robot model cloud to a scene cloud.

Pipeline: sample the link meshes into a model cloud at the known joint
state, crop the scene around the user's seed pose, smooth it with a
moving-least-squares plane projection, then refine the seed with
point-to-point ICP (SVD alignment, nearest-neighbor correspondences with
distance rejection). Robustness is probed by sweeping the seed through yaw
rotations and a translation grid, mirroring how a user's rough guess varies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySceneError
from .geometry import RigidTransform, quat_from_axis_angle, quat_from_matrix, quat_multiply
from .kinematics import JointState, KinematicChain, forward_kinematics
from .meshes import TriangleMesh

SMALL_CLOUD_SAMPLES = 16_000
BIG_CLOUD_SAMPLES = 256_000
ROTATION_STEP_DEG = 18.0
TRANSLATION_EXTENT = 0.5   # grid spans [-extent, +extent] per axis
TRANSLATION_STEP = 0.1


@dataclass(frozen=True)
class SeedPose:
    """User's rough guess of the robot base pose in the scene frame."""

    pose: RigidTransform
    crop_radius: float = 2.5

    def __post_init__(self):
        if self.crop_radius <= 0:
            raise ValueError("crop_radius must be positive")


@dataclass(frozen=True)
class IcpConfig:
    max_iterations: int = 100
    max_correspondence_distance: float = 0.25
    convergence_delta: float = 1e-5  # stop when RMS changes less than this
    mls_radius: float = 0.05

    def __post_init__(self):
        if (self.max_iterations <= 0 or self.max_correspondence_distance <= 0
                or self.convergence_delta <= 0 or self.mls_radius <= 0):
            raise ValueError("all IcpConfig values must be positive")


@dataclass(frozen=True)
class RegistrationResult:
    pose: RigidTransform
    rms: float
    iterations: int
    converged: bool
    inlier_fraction: float
    # (rms before alignment, rms after alignment) on each iteration's
    # accepted correspondence set; the alignment step may never increase it
    rms_trace: tuple[tuple[float, float], ...] = ()


def _as_cloud(points, name: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{name} must be (N, 3), got {pts.shape}")
    if len(pts) == 0:
        raise EmptySceneError(f"{name} is empty")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite points")
    return pts


def sample_mesh(mesh: TriangleMesh, samples: int, rng_seed: int) -> np.ndarray:
    """Area-weighted uniform surface samples; deterministic per rng_seed."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    if len(mesh.triangles) == 0:
        raise EmptySceneError("cannot sample an empty mesh")
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0.0:
        raise EmptySceneError("mesh has zero surface area")
    rng = np.random.default_rng(rng_seed)
    tri_idx = rng.choice(len(areas), size=samples, p=areas / total)
    a = mesh.vertices[mesh.triangles[tri_idx, 0]]
    b = mesh.vertices[mesh.triangles[tri_idx, 1]]
    c = mesh.vertices[mesh.triangles[tri_idx, 2]]
    r1 = np.sqrt(rng.random(samples))[:, None]
    r2 = rng.random(samples)[:, None]
    return (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c


def model_cloud_from_chain(chain: KinematicChain, state: JointState,
                           samples: int, rng_seed: int) -> np.ndarray:
    """Union of per-link collision-mesh samples posed by forward kinematics.

    The per-link budget is proportional to surface area (largest-remainder
    rounding keeps the total exact).
    """
    poses = forward_kinematics(chain, state)
    meshes = [(i, link.collision_mesh) for i, link in enumerate(chain.links)
              if link.collision_mesh is not None and len(link.collision_mesh.triangles)]
    if not meshes:
        raise EmptySceneError("chain has no collision meshes to sample")
    areas = np.array([m.triangle_areas().sum() for _, m in meshes])
    raw = samples * areas / areas.sum()
    counts = np.floor(raw).astype(int)
    for i in np.argsort(raw - counts)[::-1][: samples - counts.sum()]:
        counts[i] += 1
    clouds = []
    for (link_idx, mesh), count in zip(meshes, counts):
        if count == 0:
            continue
        local = sample_mesh(mesh, int(count), rng_seed + link_idx)
        clouds.append(poses[link_idx].apply_points(local))
    return np.vstack(clouds)


def crop_scene(cloud, seed: SeedPose) -> np.ndarray:
    """Scene points within the seed's crop radius of the seed position."""
    pts = _as_cloud(cloud, "scene cloud")
    keep = np.linalg.norm(pts - seed.pose.translation, axis=1) <= seed.crop_radius
    if not keep.any():
        raise EmptySceneError(
            f"no scene points within {seed.crop_radius} m of the seed; registration cannot proceed")
    return pts[keep]


def mls_smooth(cloud, radius: float) -> np.ndarray:
    """Project each point onto the best-fit plane of its radius neighborhood.

    Points with fewer than 3 neighbors (the point itself included) pass
    through unchanged.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = _as_cloud(cloud, "cloud")
    tree = cKDTree(pts)
    neighborhoods = tree.query_ball_point(pts, r=radius)
    out = pts.copy()
    for i, idx in enumerate(neighborhoods):
        if len(idx) < 3:
            continue
        nb = pts[idx]
        centroid = nb.mean(axis=0)
        cov = (nb - centroid).T @ (nb - centroid)
        _, vecs = np.linalg.eigh(cov)
        normal = vecs[:, 0]  # smallest-variance direction
        out[i] = pts[i] - np.dot(pts[i] - centroid, normal) * normal
    return out


def _best_rigid_transform(src: np.ndarray, dst: np.ndarray) -> RigidTransform:
    """Least-squares rigid transform mapping src onto dst (SVD, no reflections)."""
    c_src = src.mean(axis=0)
    c_dst = dst.mean(axis=0)
    H = (src - c_src).T @ (dst - c_dst)
    U, _, Vt = np.linalg.svd(H)
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    R = Vt.T @ D @ U.T
    return RigidTransform(quat_from_matrix(R), c_dst - R @ c_src)


def rms_closest_point(a, b) -> float:
    """Root mean square distance from each point of a to its nearest point of b."""
    a = _as_cloud(a, "cloud a")
    b = _as_cloud(b, "cloud b")
    d, _ = cKDTree(b).query(a, workers=-1)
    return float(np.sqrt(np.mean(d ** 2)))


def icp_register(model, scene, seed: SeedPose, cfg: IcpConfig) -> RegistrationResult:
    """Point-to-point ICP from the seed pose.

    Correspondences beyond max_correspondence_distance are rejected; the
    result converges when the RMS over accepted pairs changes by less than
    convergence_delta and at least half the model found a correspondent.
    """
    model = _as_cloud(model, "model cloud")
    scene = _as_cloud(scene, "scene cloud")
    tree = cKDTree(scene)
    pose = seed.pose
    prev_rms: Optional[float] = None
    rms = math.inf
    inlier_fraction = 0.0
    trace: list[tuple[float, float]] = []
    delta_converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        pts = pose.apply_points(model)
        d, idx = tree.query(pts, workers=-1)
        mask = d <= cfg.max_correspondence_distance
        inlier_fraction = float(mask.mean())
        if not mask.any():
            # lost (or never had) overlap: report the seed-relative situation
            return RegistrationResult(
                pose=seed.pose, rms=float(np.sqrt(np.mean(d ** 2))),
                iterations=iterations, converged=False,
                inlier_fraction=0.0, rms_trace=tuple(trace))
        src = pts[mask]
        dst = scene[idx[mask]]
        rms_before = float(np.sqrt(np.mean(d[mask] ** 2)))
        delta_pose = _best_rigid_transform(src, dst)
        pose = delta_pose @ pose
        aligned = delta_pose.apply_points(src)
        rms = float(np.sqrt(np.mean(np.sum((aligned - dst) ** 2, axis=1))))
        trace.append((rms_before, rms))
        if prev_rms is not None and abs(prev_rms - rms) < cfg.convergence_delta:
            delta_converged = True
            break
        prev_rms = rms

    return RegistrationResult(
        pose=pose, rms=rms, iterations=iterations,
        converged=delta_converged and inlier_fraction >= 0.5,
        inlier_fraction=inlier_fraction, rms_trace=tuple(trace))


@dataclass(frozen=True)
class SweepEntry:
    kind: str  # "rotation" | "translation"
    dx: float
    dy: float
    dz: float
    yaw_deg: float
    seed_rms: float  # closest-point RMS at the perturbed seed, before ICP
    result: RegistrationResult


@dataclass(frozen=True)
class SweepReport:
    entries: tuple[SweepEntry, ...]
    header: tuple[str, ...] = (
        "rotation sweep: 20 yaw steps of 18 deg (0 deg included)",
        "translation grid: inclusive endpoints, -0.5..0.5 m per axis, step 0.1 m (11^3 points)",
    )

    def of_kind(self, kind: str) -> list[SweepEntry]:
        return [e for e in self.entries if e.kind == kind]

    def summary(self) -> dict[str, dict[str, float]]:
        """Table of mean/min/max/std: seed guesses vs converged ICP results."""
        out = {}

        def stats(values):
            arr = np.asarray(values, dtype=float)
            if len(arr) == 0:
                return {"mean": math.nan, "min": math.nan, "max": math.nan,
                        "std": math.nan, "count": 0}
            return {"mean": float(arr.mean()), "min": float(arr.min()),
                    "max": float(arr.max()), "std": float(arr.std()),
                    "count": int(len(arr))}

        out["user_guess"] = stats([e.seed_rms for e in self.entries])
        converged = [e for e in self.entries if e.result.converged]
        out["icp_all"] = stats([e.result.rms for e in converged])
        for kind in ("rotation", "translation"):
            out[f"icp_{kind}"] = stats(
                [e.result.rms for e in converged if e.kind == kind])
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as f:
            for line in self.header:
                f.write(f"# {line}\n")
            writer = csv.writer(f)
            writer.writerow(["kind", "dx", "dy", "dz", "yaw_deg",
                             "rms", "iterations", "converged"])
            for e in self.entries:
                writer.writerow([e.kind, e.dx, e.dy, e.dz, e.yaw_deg,
                                 repr(e.result.rms), e.result.iterations,
                                 str(e.result.converged).lower()])
            writer.writerow([])
            writer.writerow(["summary", "label", "mean", "min", "max", "std", "count"])
            for label, s in self.summary().items():
                writer.writerow(["summary", label, repr(s["mean"]), repr(s["min"]),
                                 repr(s["max"]), repr(s["std"]), s["count"]])


def _perturb_rotation(seed: SeedPose, yaw: float) -> SeedPose:
    spin = quat_from_axis_angle((0.0, 0.0, 1.0), yaw)
    pose = RigidTransform(quat_multiply(seed.pose.rotation, spin), seed.pose.translation)
    return SeedPose(pose, seed.crop_radius)


def _perturb_translation(seed: SeedPose, offset) -> SeedPose:
    pose = RigidTransform(seed.pose.rotation, seed.pose.translation + np.asarray(offset))
    return SeedPose(pose, seed.crop_radius)


def robustness_sweep(model, scene, true_seed: SeedPose, cfg: IcpConfig,
                     kinds: tuple[str, ...] = ("rotation", "translation")) -> SweepReport:
    """Re-register from systematically perturbed seeds and collect statistics.

    Rotation entries spin the seed about its local z in 18-degree steps over
    a full turn; translation entries offset it over an inclusive 11x11x11
    grid spanning one meter per axis. Entries are ordered by perturbation
    key, not completion order.
    """
    model = _as_cloud(model, "model cloud")
    scene = _as_cloud(scene, "scene cloud")
    entries: list[SweepEntry] = []

    def run(kind, seed, dx=0.0, dy=0.0, dz=0.0, yaw_deg=0.0):
        seed_rms = rms_closest_point(seed.pose.apply_points(model), scene)
        result = icp_register(model, scene, seed, cfg)
        entries.append(SweepEntry(kind, dx, dy, dz, yaw_deg, seed_rms, result))

    if "rotation" in kinds:
        steps = int(round(360.0 / ROTATION_STEP_DEG))
        for k in range(steps):
            yaw_deg = k * ROTATION_STEP_DEG
            run("rotation", _perturb_rotation(true_seed, math.radians(yaw_deg)),
                yaw_deg=yaw_deg)
    if "translation" in kinds:
        n = int(round(2 * TRANSLATION_EXTENT / TRANSLATION_STEP)) + 1
        offsets = np.linspace(-TRANSLATION_EXTENT, TRANSLATION_EXTENT, n)
        for dx in offsets:
            for dy in offsets:
                for dz in offsets:
                    run("translation",
                        _perturb_translation(true_seed, (dx, dy, dz)),
                        dx=float(dx), dy=float(dy), dz=float(dz))
    return SweepReport(tuple(entries))
