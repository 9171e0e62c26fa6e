import numpy as np
import pytest

from handguide.errors import ChainFormatError, EmptySceneError
from handguide.meshes import (TriangleMesh, box_mesh, load_mesh, read_point_cloud,
                              read_stl, write_mesh_ply, write_point_cloud)

from conftest import FIXTURES


def test_point_cloud_ascii_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(57, 3))
    path = tmp_path / "cloud.ply"
    write_point_cloud(path, pts)
    back = read_point_cloud(path)
    np.testing.assert_array_equal(back, pts)  # repr() round-trips float64 exactly


def test_point_cloud_binary_little_endian():
    pts = read_point_cloud(FIXTURES / "five_points_binary.ply")
    assert pts.shape == (5, 3)
    np.testing.assert_allclose(pts[4], [-1.0, 2.0, 0.5], atol=1e-6)


def test_mesh_ply_round_trip(tmp_path):
    mesh = box_mesh((1.0, 2.0, 3.0), (0.5, 0.0, -1.0))
    path = tmp_path / "box.ply"
    write_mesh_ply(path, mesh)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)


def test_stl_binary_read():
    mesh = read_stl(FIXTURES / "kr5_like" / "link4.stl")
    assert len(mesh.vertices) == 8  # unified corner vertices of the box
    assert len(mesh.triangles) == 12
    extents = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    np.testing.assert_allclose(extents, [0.14, 0.13, 0.13], atol=1e-6)


def test_stl_rejects_ascii(tmp_path):
    path = tmp_path / "bad.stl"
    path.write_text("solid something\nendsolid something\n" + "x" * 100)
    with pytest.raises(ChainFormatError):
        read_stl(path)


def test_unknown_mesh_extension(tmp_path):
    path = tmp_path / "mesh.obj"
    path.write_text("whatever")
    with pytest.raises(ChainFormatError):
        load_mesh(path)


def test_empty_cloud_rejected(tmp_path):
    path = tmp_path / "empty.ply"
    write_point_cloud(path, np.zeros((0, 3)))
    with pytest.raises(EmptySceneError):
        read_point_cloud(path)


def test_mesh_validation():
    with pytest.raises(ValueError):
        TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))  # index out of range
    with pytest.raises(ValueError):
        TriangleMesh(np.array([[0.0, 0.0, np.inf]]), np.zeros((0, 3), dtype=int))


def test_triangle_areas():
    mesh = TriangleMesh(np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]]),
                        np.array([[0, 1, 2]]))
    assert mesh.triangle_areas()[0] == pytest.approx(0.5)


def test_box_mesh_watertight_area():
    mesh = box_mesh((1.0, 1.0, 1.0))
    assert mesh.triangle_areas().sum() == pytest.approx(6.0)
