import csv

import numpy as np
import pytest

from handguide.errors import EmptySceneError
from handguide.geometry import (RigidTransform, quat_from_axis_angle, quat_multiply,
                                quat_rotate, rotation_vector, quat_conjugate)
from handguide.kinematics import JointState
from handguide.meshes import TriangleMesh, box_mesh
from handguide.registration import (IcpConfig, SMALL_CLOUD_SAMPLES, SeedPose,
                                    crop_scene, icp_register, mls_smooth,
                                    model_cloud_from_chain, rms_closest_point,
                                    robustness_sweep, sample_mesh)

UNIT_SQUARE = TriangleMesh(
    np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 1, 0], [0.0, 1, 0]]),
    np.array([[0, 1, 2], [0, 2, 3]]))


def asymmetric_cloud(n=800, seed=0):
    """Two fused boxes; no symmetry, so registration has a unique optimum."""
    rng = np.random.default_rng(seed)
    a = rng.uniform([-0.5, -0.2, 0.0], [0.5, 0.2, 0.4], size=(n // 2, 3))
    b = rng.uniform([0.1, -0.2, 0.4], [0.5, 0.1, 1.0], size=(n - n // 2, 3))
    return np.vstack([a, b])


def pose_angle(a: RigidTransform, b: RigidTransform) -> float:
    """Rotation angle between two poses, radians."""
    q_err = quat_multiply(a.rotation, quat_conjugate(b.rotation))
    return float(np.linalg.norm(rotation_vector(q_err)))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sample_mesh_uniform_mean():
    pts = sample_mesh(UNIT_SQUARE, 10_000, rng_seed=1)
    np.testing.assert_allclose(pts.mean(axis=0), [0.5, 0.5, 0.0], atol=0.02)
    assert pts.shape == (10_000, 3)
    assert np.all(pts[:, 0] >= 0) and np.all(pts[:, 0] <= 1)


def test_sample_single_triangle_inside():
    tri = TriangleMesh(np.array([[0.0, 0, 0], [2.0, 0, 0], [0.0, 3.0, 0]]),
                       np.array([[0, 1, 2]]))
    p = sample_mesh(tri, 1, rng_seed=9)[0]
    # barycentric coordinates all non-negative
    assert p[0] >= 0 and p[1] >= 0
    assert p[0] / 2.0 + p[1] / 3.0 <= 1.0 + 1e-12
    np.testing.assert_array_equal(sample_mesh(tri, 1, rng_seed=9)[0], p)


def test_sample_small_preset_size():
    pts = sample_mesh(UNIT_SQUARE, SMALL_CLOUD_SAMPLES, rng_seed=3)
    assert len(pts) == 16_000


def test_sample_deterministic():
    a = sample_mesh(UNIT_SQUARE, 500, rng_seed=42)
    b = sample_mesh(UNIT_SQUARE, 500, rng_seed=42)
    np.testing.assert_array_equal(a, b)
    c = sample_mesh(UNIT_SQUARE, 500, rng_seed=43)
    assert not np.array_equal(a, c)


def test_sample_degenerate_triangles_ignored():
    mesh = TriangleMesh(
        np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 1, 0], [2.0, 0, 0]]),
        np.array([[0, 1, 2], [0, 1, 3]]))  # second triangle has zero area
    pts = sample_mesh(mesh, 2000, rng_seed=5)
    # all samples inside the non-degenerate triangle
    assert np.all(pts[:, 1] >= -1e-12)
    assert np.all(pts[:, 0] - pts[:, 1] <= 1.0 + 1e-9)


def test_sample_empty_mesh_rejected():
    empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(EmptySceneError):
        sample_mesh(empty, 10, rng_seed=0)


def test_model_cloud_from_chain_counts(kr5_chain):
    cloud = model_cloud_from_chain(kr5_chain, JointState(np.zeros(6)), 4000, 7)
    assert cloud.shape == (4000, 3)
    again = model_cloud_from_chain(kr5_chain, JointState(np.zeros(6)), 4000, 7)
    np.testing.assert_array_equal(cloud, again)


# ---------------------------------------------------------------------------
# crop
# ---------------------------------------------------------------------------

def seed_at(xyz, yaw=0.0, crop_radius=2.5):
    return SeedPose(RigidTransform(quat_from_axis_angle((0, 0, 1), yaw),
                                   np.asarray(xyz, dtype=float)), crop_radius)


def test_crop_keeps_all_inside():
    cloud = np.random.default_rng(0).uniform(-1, 1, size=(100, 3))
    out = crop_scene(cloud, seed_at((0, 0, 0), crop_radius=5.0))
    np.testing.assert_array_equal(out, cloud)


def test_crop_all_outside_is_error():
    cloud = np.ones((10, 3)) * 100.0
    with pytest.raises(EmptySceneError):
        crop_scene(cloud, seed_at((0, 0, 0), crop_radius=2.5))


def test_crop_matches_bruteforce():
    rng = np.random.default_rng(19)
    cloud = rng.uniform(-4, 4, size=(500, 3))
    seed = seed_at((0.5, -0.25, 1.0), crop_radius=2.5)
    out = crop_scene(cloud, seed)
    expected = np.array([p for p in cloud
                         if np.linalg.norm(p - seed.pose.translation) <= 2.5])
    np.testing.assert_array_equal(out, expected)


# ---------------------------------------------------------------------------
# MLS
# ---------------------------------------------------------------------------

def grid_plane(n=41, extent=1.0):
    xs = np.linspace(-extent, extent, n)
    gx, gy = np.meshgrid(xs, xs)
    return np.stack([gx.ravel(), gy.ravel(), np.zeros(n * n)], axis=1)


def test_mls_plane_is_fixed_point():
    plane = grid_plane()
    out = mls_smooth(plane, radius=0.2)
    np.testing.assert_allclose(out, plane, atol=1e-9)


def test_mls_reduces_plane_noise():
    rng = np.random.default_rng(23)
    plane = grid_plane()
    noisy = plane + np.stack([np.zeros(len(plane)), np.zeros(len(plane)),
                              rng.normal(0, 0.005, len(plane))], axis=1)
    out = mls_smooth(noisy, radius=0.15)
    rms_before = np.sqrt(np.mean(noisy[:, 2] ** 2))
    rms_after = np.sqrt(np.mean(out[:, 2] ** 2))
    assert rms_after <= rms_before / 2.0


def test_mls_isolated_points_pass_through():
    pts = np.array([[0.0, 0, 0], [10.0, 0, 0], [20.0, 0, 0]])
    out = mls_smooth(pts, radius=0.5)
    np.testing.assert_array_equal(out, pts)


# ---------------------------------------------------------------------------
# RMS metric
# ---------------------------------------------------------------------------

def test_rms_identical_clouds_zero():
    cloud = np.random.default_rng(1).normal(size=(50, 3))
    assert rms_closest_point(cloud, cloud) == 0.0


def test_rms_translated_far_points():
    cloud = np.array([[0.0, 0, 0], [10.0, 0, 0], [0.0, 10, 0]])
    shifted = cloud + np.array([0.25, 0.0, 0.0])
    assert rms_closest_point(cloud, shifted) == pytest.approx(0.25)


def test_rms_matches_bruteforce():
    rng = np.random.default_rng(29)
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(30, 3))
    brute = np.sqrt(np.mean([min(np.linalg.norm(p - q) for q in b) ** 2 for p in a]))
    assert rms_closest_point(a, b) == pytest.approx(brute, abs=1e-12)


# ---------------------------------------------------------------------------
# ICP
# ---------------------------------------------------------------------------

def test_icp_identity_fixed_point():
    model = asymmetric_cloud()
    result = icp_register(model, model, seed_at((0, 0, 0)), IcpConfig())
    assert result.converged
    assert result.rms <= 1e-6
    np.testing.assert_allclose(result.pose.translation, np.zeros(3), atol=1e-6)
    assert pose_angle(result.pose, RigidTransform.identity()) <= 1e-6


def known_transform():
    return RigidTransform(quat_from_axis_angle((0, 0, 1), 0.6),
                          np.array([0.4, -0.2, 0.1]))


def perturbed_seed(truth, angle=np.radians(10), shift=(0.06, -0.06, 0.05)):
    spin = quat_from_axis_angle((0, 0, 1), angle)
    return SeedPose(RigidTransform(quat_multiply(truth.rotation, spin),
                                   truth.translation + np.asarray(shift)))


def test_icp_recovers_known_transform():
    model = asymmetric_cloud()
    truth = known_transform()
    scene = truth.apply_points(model)
    result = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    assert result.converged
    np.testing.assert_allclose(result.pose.translation, truth.translation, atol=1e-3)
    assert pose_angle(result.pose, truth) <= np.radians(0.5)


def test_icp_rejection_shields_against_clutter():
    model = asymmetric_cloud()
    truth = known_transform()
    rng = np.random.default_rng(31)
    clutter = rng.uniform([2.0, 2.0, 0.0], [4.0, 4.0, 1.0], size=(int(0.3 * len(model)), 3))
    scene = np.vstack([truth.apply_points(model), clutter])
    result = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    assert result.converged
    np.testing.assert_allclose(result.pose.translation, truth.translation, atol=1e-3)
    assert pose_angle(result.pose, truth) <= np.radians(0.5)


def test_icp_alignment_never_increases_rms():
    model = asymmetric_cloud()
    truth = known_transform()
    scene = truth.apply_points(model)
    result = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    assert len(result.rms_trace) >= 2
    for before, after in result.rms_trace:
        assert after <= before + 1e-12


def test_icp_rotation_is_orthonormal():
    from handguide.geometry import quat_to_matrix
    model = asymmetric_cloud()
    truth = known_transform()
    scene = truth.apply_points(model)
    result = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    R = quat_to_matrix(result.pose.rotation)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)


def test_icp_no_overlap_returns_seed():
    model = asymmetric_cloud(n=100)
    scene = model + np.array([50.0, 0.0, 0.0])
    seed = seed_at((0, 0, 0))
    result = icp_register(model, scene, seed, IcpConfig())
    assert not result.converged
    assert result.inlier_fraction == 0.0
    np.testing.assert_array_equal(result.pose.translation, seed.pose.translation)
    assert result.rms >= 49.0


def test_icp_deterministic():
    model = asymmetric_cloud()
    truth = known_transform()
    scene = truth.apply_points(model)
    a = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    b = icp_register(model, scene, perturbed_seed(truth), IcpConfig())
    np.testing.assert_array_equal(a.pose.translation, b.pose.translation)
    np.testing.assert_array_equal(a.pose.rotation, b.pose.rotation)
    assert a.rms == b.rms and a.iterations == b.iterations


def test_icp_inlier_fraction_below_half_not_converged():
    # model twice the extent of the scene: most points find no correspondent
    rng = np.random.default_rng(37)
    scene = rng.uniform(-0.2, 0.2, size=(200, 3))
    model = np.vstack([scene, rng.uniform([5, 5, 5], [8, 8, 8], size=(400, 3))])
    result = icp_register(model, scene, seed_at((0, 0, 0)), IcpConfig())
    assert result.inlier_fraction < 0.5
    assert not result.converged


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def sphere_cloud(n, radius=1.0, seed=0, center=(0, 0, 0)):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius + np.asarray(center, dtype=float)


def test_rotation_sweep_has_20_rows_all_converged_on_basin_fixture(tmp_path):
    # sphere model: every yaw perturbation stays inside the basin
    model = sphere_cloud(400, seed=1)
    scene = sphere_cloud(400, seed=2)
    report = robustness_sweep(model, scene, seed_at((0, 0, 0)), IcpConfig(),
                              kinds=("rotation",))
    assert len(report.entries) == 20
    assert all(e.kind == "rotation" for e in report.entries)
    assert [e.yaw_deg for e in report.entries] == [18.0 * k for k in range(20)]
    assert all(e.result.converged for e in report.entries)
    floor = report.entries[0].result.rms
    assert max(e.result.rms for e in report.entries) <= 10 * max(floor, 1e-4)

    out = tmp_path / "sweep.csv"
    report.write_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#")
    rows = [r for r in csv.reader(lines) if r and not r[0].startswith("#")]
    assert rows[0] == ["kind", "dx", "dy", "dz", "yaw_deg",
                       "rms", "iterations", "converged"]
    data = [r for r in rows[1:] if r and r[0] == "rotation"]
    assert len(data) == 20
    summary = [r for r in rows if r and r[0] == "summary"]
    assert {"user_guess", "icp_all", "icp_rotation", "icp_translation"} <= {
        r[1] for r in summary if len(r) > 1}


def test_translation_sweep_grid_is_11_cubed():
    # tiny clouds: this only checks the grid shape and ordering
    model = sphere_cloud(60, seed=3)
    scene = sphere_cloud(60, seed=4)
    cfg = IcpConfig(max_iterations=2)
    report = robustness_sweep(model, scene, seed_at((0, 0, 0)), cfg,
                              kinds=("translation",))
    assert len(report.entries) == 11 ** 3
    offsets = {(e.dx, e.dy, e.dz) for e in report.entries}
    assert len(offsets) == 11 ** 3
    assert (0.0, 0.0, 0.0) in offsets
    assert (-0.5, -0.5, -0.5) in offsets and (0.5, 0.5, 0.5) in offsets
    keys = [(e.dx, e.dy, e.dz) for e in report.entries]
    assert keys == sorted(keys)


def test_sweep_summary_orders_icp_below_guess():
    model = asymmetric_cloud(n=400)
    scene = asymmetric_cloud(n=400, seed=99)
    report = robustness_sweep(model, scene, seed_at((0, 0, 0)), IcpConfig(),
                              kinds=("rotation",))
    summary = report.summary()
    assert summary["icp_rotation"]["count"] >= 1
    converged_mean = summary["icp_all"]["mean"]
    assert converged_mean < summary["user_guess"]["mean"]
