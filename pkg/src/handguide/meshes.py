"""Triangle meshes and point clouds, with PLY/STL file IO.

Point clouds are plain (N, 3) float64 arrays. Supported files:
ASCII PLY (read/write), binary_little_endian PLY (read), binary
little-endian STL (read).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChainFormatError, EmptySceneError

_PLY_SIZES = {
    "char": 1, "uchar": 1, "int8": 1, "uint8": 1,
    "short": 2, "ushort": 2, "int16": 2, "uint16": 2,
    "int": 4, "uint": 4, "int32": 4, "uint32": 4,
    "float": 4, "float32": 4,
    "double": 8, "float64": 8,
}
_PLY_STRUCT = {
    "char": "b", "uchar": "B", "int8": "b", "uint8": "B",
    "short": "h", "ushort": "H", "int16": "h", "uint16": "H",
    "int": "i", "uint": "I", "int32": "i", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (V, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError(f"triangles must be (T, 3), got {t.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh vertices must be finite")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _parse_ply_header(f):
    def line():
        raw = f.readline()
        if not raw:
            raise ChainFormatError("PLY: unexpected end of header")
        return raw.decode("ascii", errors="replace").strip()

    if line() != "ply":
        raise ChainFormatError("PLY: missing 'ply' magic")
    fmt = None
    elements = []  # (name, count, [(kind, type or list-types, prop-name)])
    while True:
        ln = line()
        if ln == "end_header":
            break
        parts = ln.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ChainFormatError("PLY: property before any element")
            if parts[1] == "list":
                elements[-1][2].append(("list", (parts[2], parts[3]), parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise ChainFormatError(f"PLY: unsupported format {fmt!r}")
    return fmt, elements


def _read_ply(path: Path):
    """Return (vertices (N,3) float64, faces (M,3) int64 or None)."""
    try:
        f = open(path, "rb")
    except OSError as e:
        raise ChainFormatError(f"cannot read {path}: {e}")
    with f:
        fmt, elements = _parse_ply_header(f)
        vertices = None
        faces = None
        for name, count, props in elements:
            if fmt == "ascii":
                rows = []
                for _ in range(count):
                    raw = f.readline()
                    if not raw:
                        raise ChainFormatError(f"PLY: truncated element {name!r}")
                    rows.append(raw.split())
                if name == "vertex":
                    cols = {p[2]: i for i, p in enumerate(props)}
                    try:
                        xi, yi, zi = cols["x"], cols["y"], cols["z"]
                    except KeyError:
                        raise ChainFormatError("PLY: vertex element lacks x/y/z")
                    vertices = np.array(
                        [[float(r[xi]), float(r[yi]), float(r[zi])] for r in rows])
                elif name == "face":
                    tris = []
                    for r in rows:
                        n = int(r[0])
                        poly = [int(v) for v in r[1:1 + n]]
                        for k in range(1, n - 1):  # fan-triangulate polygons
                            tris.append((poly[0], poly[k], poly[k + 1]))
                    faces = np.array(tris, dtype=np.int64) if tris else np.zeros((0, 3), np.int64)
            else:
                if name == "vertex":
                    if any(k != "scalar" for k, _, _ in props):
                        raise ChainFormatError("PLY: list property in vertex element")
                    names = [p[2] for p in props]
                    dtype = np.dtype([(p[2], "<" + _PLY_STRUCT[p[1]]) for p in props])
                    buf = f.read(dtype.itemsize * count)
                    if len(buf) != dtype.itemsize * count:
                        raise ChainFormatError("PLY: truncated vertex data")
                    rec = np.frombuffer(buf, dtype=dtype)
                    for ax in ("x", "y", "z"):
                        if ax not in names:
                            raise ChainFormatError("PLY: vertex element lacks x/y/z")
                    vertices = np.stack(
                        [rec["x"], rec["y"], rec["z"]], axis=1).astype(float)
                elif name == "face":
                    tris = []
                    for _ in range(count):
                        (kind, types, _), = [p for p in props if p[0] == "list"] or [(None, None, None)]
                        if kind is None:
                            raise ChainFormatError("PLY: face element without list property")
                        nbuf = f.read(_PLY_SIZES[types[0]])
                        n = struct.unpack("<" + _PLY_STRUCT[types[0]], nbuf)[0]
                        ibuf = f.read(_PLY_SIZES[types[1]] * n)
                        poly = struct.unpack("<" + _PLY_STRUCT[types[1]] * n, ibuf)
                        for k in range(1, n - 1):
                            tris.append((poly[0], poly[k], poly[k + 1]))
                    faces = np.array(tris, dtype=np.int64) if tris else np.zeros((0, 3), np.int64)
                else:
                    # skip unknown fixed-size element
                    row = sum(_PLY_SIZES[p[1]] for p in props if p[0] == "scalar")
                    f.read(row * count)
    if vertices is None:
        raise ChainFormatError(f"PLY: no vertex element in {path}")
    return vertices, faces


def read_point_cloud(path) -> np.ndarray:
    """Load an (N, 3) point cloud from an ASCII or binary-LE PLY file."""
    vertices, _ = _read_ply(Path(path))
    if len(vertices) == 0:
        raise EmptySceneError(f"point cloud {path} is empty")
    return vertices


def write_point_cloud(path, points: np.ndarray) -> None:
    """Write an (N, 3) point cloud as ASCII PLY."""
    pts = np.asarray(points, dtype=float)
    with open(path, "w", encoding="ascii") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(pts)}\n")
        f.write("property double x\nproperty double y\nproperty double z\n")
        f.write("end_header\n")
        for x, y, z in pts:
            f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def write_mesh_ply(path, mesh: TriangleMesh) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(mesh.vertices)}\n")
        f.write("property double x\nproperty double y\nproperty double z\n")
        f.write(f"element face {len(mesh.triangles)}\n")
        f.write("property list uchar int vertex_indices\n")
        f.write("end_header\n")
        for x, y, z in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {int(a)} {int(b)} {int(c)}\n")


def read_stl(path) -> TriangleMesh:
    """Load a binary little-endian STL file, merging identical vertices."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ChainFormatError(f"cannot read {path}: {e}")
    if len(data) < 84:
        raise ChainFormatError(f"STL: {path} too short for binary STL")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) != expected:
        raise ChainFormatError(
            f"STL: {path} is not binary little-endian (size {len(data)}, expected {expected})")
    rec = np.frombuffer(data, dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]), count=count, offset=84)
    tri_pts = rec["v"].reshape(-1, 3).astype(float)
    vertices, inverse = np.unique(tri_pts, axis=0, return_inverse=True)
    triangles = inverse.reshape(-1, 3).astype(np.int64)
    return TriangleMesh(vertices, triangles)


def load_mesh(path) -> TriangleMesh:
    """Load a triangle mesh from .ply (ASCII/binary-LE) or .stl (binary-LE)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".stl":
        return read_stl(path)
    if suffix == ".ply":
        vertices, faces = _read_ply(path)
        if faces is None:
            raise ChainFormatError(f"PLY mesh {path} has no face element")
        return TriangleMesh(vertices, faces)
    raise ChainFormatError(f"unsupported mesh format {suffix!r} ({path})")


def box_mesh(size, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with the given (sx, sy, sz) extents."""
    sx, sy, sz = (float(s) * 0.5 for s in size)
    cx, cy, cz = center
    corners = np.array([[cx + dx * sx, cy + dy * sy, cz + dz * sz]
                        for dx in (-1, 1) for dy in (-1, 1) for dz in (-1, 1)])
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x faces
        (0, 4, 5, 1), (2, 3, 7, 6),  # y faces
        (0, 2, 6, 4), (1, 5, 7, 3),  # z faces
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return TriangleMesh(corners, np.array(tris, dtype=np.int64))
