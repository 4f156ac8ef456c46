"""Triangle meshes: STL/OBJ loading and primitive tessellation.

All coordinates are meters. Only unit-less formats (STL, OBJ) are accepted;
anything that could carry its own unit declaration is rejected upstream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshError


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) float
    faces: np.ndarray     # (m, 3) int

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) < 1:
            raise MeshError("mesh has no triangles")
        if not np.all(np.isfinite(v)):
            raise MeshError("mesh has non-finite vertices")
        if f.min(initial=0) < 0 or (len(v) and f.max(initial=-1) >= len(v)):
            raise MeshError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


def load_mesh(path: str | Path) -> TriangleMesh:
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".stl":
        return _load_stl(path)
    if suffix == ".obj":
        return _load_obj(path)
    raise MeshError(f"unsupported mesh format '{suffix}' (expected .stl or .obj)")


def _load_stl(path: Path) -> TriangleMesh:
    raw = path.read_bytes()
    if len(raw) < 84:
        # too short for binary; try ascii
        return _parse_stl_ascii(raw.decode("utf-8", errors="replace"))
    # binary STL iff the declared triangle count matches the file size
    (count,) = struct.unpack("<I", raw[80:84])
    if len(raw) == 84 + 50 * count and not raw.lstrip().startswith(b"solid"):
        return _parse_stl_binary(raw, count)
    if len(raw) == 84 + 50 * count:
        # "solid" header but exact binary size: still binary (common in the wild)
        return _parse_stl_binary(raw, count)
    return _parse_stl_ascii(raw.decode("utf-8", errors="replace"))


def _parse_stl_binary(raw: bytes, count: int) -> TriangleMesh:
    data = np.frombuffer(raw[84:84 + 50 * count], dtype=np.uint8)
    tri = data.reshape(count, 50)[:, 12:48].copy().view("<f4").reshape(count, 3, 3)
    return _dedupe(tri.astype(float))


def _parse_stl_ascii(text: str) -> TriangleMesh:
    coords = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[0] == "vertex":
            coords.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if len(coords) < 3 or len(coords) % 3 != 0:
        raise MeshError("malformed ASCII STL")
    tri = np.array(coords).reshape(-1, 3, 3)
    return _dedupe(tri)


def _dedupe(triangles: np.ndarray) -> TriangleMesh:
    flat = triangles.reshape(-1, 3)
    verts, inverse = np.unique(flat.round(decimals=12), axis=0, return_inverse=True)
    return TriangleMesh(vertices=verts, faces=inverse.reshape(-1, 3))


def _load_obj(path: Path) -> TriangleMesh:
    verts, faces = [], []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            # fan-triangulate polygons
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if not faces:
        raise MeshError("OBJ file has no faces")
    return TriangleMesh(vertices=np.array(verts), faces=np.array(faces))


def save_stl(mesh: TriangleMesh, path: str | Path) -> None:
    """Binary STL writer."""
    path = Path(path)
    tri = mesh.vertices[mesh.faces]  # (m, 3, 3)
    m = len(tri)
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    n = np.cross(e1, e2)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)
    rec = np.zeros(m, dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)),
                                      ("attr", "<u2")]))
    rec["n"] = n
    rec["v"] = tri
    with open(path, "wb") as f:
        f.write(b"\0" * 80)
        f.write(struct.pack("<I", m))
        f.write(rec.tobytes())


# ---------------------------------------------------------------------------
# primitive tessellation


def box_mesh(size) -> TriangleMesh:
    sx, sy, sz = np.asarray(size, dtype=float) / 2.0
    v = np.array([[x, y, z] for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)])
    f = np.array([
        [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1], [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
    ])
    return TriangleMesh(vertices=v, faces=f)


def cylinder_mesh(radius: float, length: float, segments: int = 24) -> TriangleMesh:
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    lo = np.column_stack([ring, np.full(segments, -length / 2)])
    hi = np.column_stack([ring, np.full(segments, length / 2)])
    verts = np.vstack([lo, hi, [[0, 0, -length / 2]], [[0, 0, length / 2]]])
    c_lo, c_hi = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + i], [j, segments + j, segments + i]]
        faces += [[c_lo, j, i], [c_hi, segments + i, segments + j]]
    return TriangleMesh(vertices=verts, faces=np.array(faces))


def sphere_mesh(radius: float, subdivisions: int = 12) -> TriangleMesh:
    return ellipsoid_mesh((radius, radius, radius), subdivisions)


def ellipsoid_mesh(radii, subdivisions: int = 12) -> TriangleMesh:
    rx, ry, rz = radii
    n_lat, n_lon = subdivisions, 2 * subdivisions
    lat = np.linspace(0, np.pi, n_lat + 1)
    lon = np.linspace(0, 2 * np.pi, n_lon, endpoint=False)
    verts = [[0.0, 0.0, rz]]
    for la in lat[1:-1]:
        for lo in lon:
            verts.append([rx * np.sin(la) * np.cos(lo),
                          ry * np.sin(la) * np.sin(lo),
                          rz * np.cos(la)])
    verts.append([0.0, 0.0, -rz])
    top, bot = 0, len(verts) - 1
    row = lambda r: 1 + r * n_lon  # noqa: E731
    faces = []
    for j in range(n_lon):
        k = (j + 1) % n_lon
        faces.append([top, row(0) + j, row(0) + k])
        faces.append([bot, row(n_lat - 2) + k, row(n_lat - 2) + j])
    for r in range(n_lat - 2):
        for j in range(n_lon):
            k = (j + 1) % n_lon
            a, b = row(r) + j, row(r) + k
            c, d = row(r + 1) + j, row(r + 1) + k
            faces += [[a, c, b], [b, c, d]]
    return TriangleMesh(vertices=np.array(verts), faces=np.array(faces))


def lathe_mesh(profile, segments: int = 32) -> TriangleMesh:
    """Surface of revolution about +z from an (r, z) polyline profile."""
    profile = np.asarray(profile, dtype=float)
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    rows = []
    for r, z in profile:
        if r <= 1e-12:
            rows.append(np.array([[0.0, 0.0, z]]))
        else:
            rows.append(np.column_stack([r * np.cos(ang), r * np.sin(ang),
                                         np.full(segments, z)]))
    verts = np.vstack(rows)
    offsets = np.cumsum([0] + [len(r) for r in rows])
    faces = []
    for i in range(len(rows) - 1):
        a0, na = offsets[i], len(rows[i])
        b0, nb = offsets[i + 1], len(rows[i + 1])
        if na == 1 and nb == 1:
            continue
        if na == 1:
            for j in range(nb):
                faces.append([a0, b0 + j, b0 + (j + 1) % nb])
        elif nb == 1:
            for j in range(na):
                faces.append([a0 + j, b0, a0 + (j + 1) % na])
        else:
            for j in range(segments):
                k = (j + 1) % segments
                faces += [[a0 + j, b0 + j, a0 + k], [a0 + k, b0 + j, b0 + k]]
    return TriangleMesh(vertices=verts, faces=np.array(faces))
