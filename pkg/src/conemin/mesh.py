"""Oriented triangle meshes with per-vertex constraint classes.

A mesh stands for a surface-with-boundary inside a convex polyhedral cone.
Each vertex carries a constraint class: free interior point, point confined
to one cone facet plane, point pinned to the line where two facets meet, or
point clamped to the sphere of radius ``clamp_radius``.  Wavefront text
import/export keeps the classes in a JSON sidecar keyed by vertex index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .geometry import PolyhedralCone

AREA_TOL = 1e-14
PLANE_TOL = 1e-9


class VertexClass(IntEnum):
    INTERIOR = 0
    FREE_BOUNDARY = 1
    EDGE_PINNED = 2
    CLAMPED = 3


_CLASS_NAMES = {
    VertexClass.INTERIOR: "interior",
    VertexClass.FREE_BOUNDARY: "free_boundary",
    VertexClass.EDGE_PINNED: "edge_pinned",
    VertexClass.CLAMPED: "clamped",
}
_NAME_CLASSES = {v: k for k, v in _CLASS_NAMES.items()}


@dataclass
class TriMesh:
    """Triangle mesh with constraint classes.

    vertices: (n, 3) float array.
    triangles: (m, 3) int array, consistent counter-clockwise orientation.
    vertex_class: (n,) int array of VertexClass values.
    facet: (n,) int array; facet index for FREE_BOUNDARY and first facet for
        EDGE_PINNED vertices, -1 elsewhere.
    facet2: (n,) int array; second facet for EDGE_PINNED vertices, -1 else.
    clamp_radius: sphere radius for CLAMPED vertices, or None.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_class: np.ndarray
    facet: np.ndarray = None
    facet2: np.ndarray = None
    clamp_radius: float | None = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be an (n, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be an (m, 3) array")
        n = self.vertices.shape[0]
        self.vertex_class = np.ascontiguousarray(self.vertex_class, dtype=np.int64)
        if self.vertex_class.shape != (n,):
            raise ValueError("vertex_class must have one entry per vertex")
        if self.facet is None:
            self.facet = np.full(n, -1, dtype=np.int64)
        else:
            self.facet = np.ascontiguousarray(self.facet, dtype=np.int64)
        if self.facet2 is None:
            self.facet2 = np.full(n, -1, dtype=np.int64)
        else:
            self.facet2 = np.ascontiguousarray(self.facet2, dtype=np.int64)
        if self.facet.shape != (n,) or self.facet2.shape != (n,):
            raise ValueError("facet arrays must have one entry per vertex")
        if self.clamp_radius is not None:
            self.clamp_radius = float(self.clamp_radius)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.vertices.copy(),
            self.triangles.copy(),
            self.vertex_class.copy(),
            self.facet.copy(),
            self.facet2.copy(),
            self.clamp_radius,
        )

    def triangle_corners(self):
        """Corner position arrays (a, b, c), each of shape (m, 3)."""
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]


def triangle_areas(mesh: TriMesh) -> np.ndarray:
    a, b, c = mesh.triangle_corners()
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def triangle_normals(mesh: TriMesh) -> np.ndarray:
    """Unit normals; degenerate triangles yield zero vectors."""
    a, b, c = mesh.triangle_corners()
    n = np.cross(b - a, c - a)
    lens = np.linalg.norm(n, axis=1)
    safe = np.where(lens > 0, lens, 1.0)
    return n / safe[:, None]


def surface_area(mesh: TriMesh) -> float:
    return float(triangle_areas(mesh).sum())


def boundary_edges(mesh: TriMesh) -> np.ndarray:
    """Directed edges that appear in exactly one triangle, shape (k, 2)."""
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = edges.min(axis=1) * mesh.n_vertices + edges.max(axis=1)
    uniq, counts = np.unique(key, return_counts=True)
    single = uniq[counts == 1]
    return edges[np.isin(key, single)]


def validate(mesh: TriMesh, cone: PolyhedralCone) -> None:
    """Raise ValueError on the first violated mesh invariant."""
    n, t = mesh.n_vertices, mesh.triangles
    if t.size and (t.min() < 0 or t.max() >= n):
        raise ValueError("triangle index out of range")
    areas = triangle_areas(mesh)
    if np.any(areas <= AREA_TOL):
        bad = int(np.argmin(areas))
        raise ValueError(f"degenerate triangle {bad} (area {areas[bad]:.3e})")

    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    directed = edges[:, 0] * n + edges[:, 1]
    if np.unique(directed).size != directed.size:
        raise ValueError("inconsistent orientation: repeated directed edge")
    undirected = edges.min(axis=1) * n + edges.max(axis=1)
    _, counts = np.unique(undirected, return_counts=True)
    if np.any(counts > 2):
        raise ValueError("non-manifold edge: more than two incident triangles")

    normals = cone.normals
    for i in range(n):
        cls = mesh.vertex_class[i]
        v = mesh.vertices[i]
        if cls == VertexClass.FREE_BOUNDARY:
            f = mesh.facet[i]
            if f < 0 or f >= len(normals):
                raise ValueError(f"vertex {i}: invalid facet index {f}")
            if abs(float(normals[f] @ v)) > PLANE_TOL:
                raise ValueError(f"vertex {i} off its facet plane")
        elif cls == VertexClass.EDGE_PINNED:
            f, g = mesh.facet[i], mesh.facet2[i]
            if min(f, g) < 0 or max(f, g) >= len(normals):
                raise ValueError(f"vertex {i}: invalid facet pair ({f}, {g})")
            if (abs(float(normals[f] @ v)) > PLANE_TOL
                    or abs(float(normals[g] @ v)) > PLANE_TOL):
                raise ValueError(f"vertex {i} off its pinned edge line")
        elif cls == VertexClass.CLAMPED:
            if mesh.clamp_radius is None:
                raise ValueError("clamped vertices but no clamp_radius")
            if abs(float(np.linalg.norm(v)) - mesh.clamp_radius) > PLANE_TOL:
                raise ValueError(f"vertex {i} off the clamp sphere")
        elif cls != VertexClass.INTERIOR:
            raise ValueError(f"vertex {i}: unknown class {cls}")


def euler_characteristic(mesh: TriMesh) -> int:
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    undirected = edges.min(axis=1) * mesh.n_vertices + edges.max(axis=1)
    n_edges = np.unique(undirected).size
    used = np.unique(t)
    return int(used.size - n_edges + mesh.n_triangles)


def save_obj(mesh: TriMesh, path) -> None:
    """Write vertices/faces as Wavefront text plus a JSON class sidecar."""
    path = Path(path)
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for tri in mesh.triangles:
        lines.append(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    path.write_text("\n".join(lines) + "\n")

    classes = {}
    for i in range(mesh.n_vertices):
        cls = VertexClass(mesh.vertex_class[i])
        rec = {"class": _CLASS_NAMES[cls]}
        if cls in (VertexClass.FREE_BOUNDARY, VertexClass.EDGE_PINNED):
            rec["facet"] = int(mesh.facet[i])
        if cls == VertexClass.EDGE_PINNED:
            rec["facet2"] = int(mesh.facet2[i])
        classes[str(i)] = rec
    sidecar = {"clamp_radius": mesh.clamp_radius, "classes": classes}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=1, sort_keys=True) + "\n")


def load_obj(path) -> TriMesh:
    """Read a Wavefront triangle mesh; classes come from the sidecar when
    present, otherwise every vertex is interior."""
    path = Path(path)
    verts, tris = [], []
    for line in path.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            if len(idx) != 3:
                raise ValueError("only triangle faces are supported")
            tris.append(idx)
    vertices = np.array(verts, dtype=float).reshape(len(verts), 3)
    triangles = np.array(tris, dtype=np.int64).reshape(len(tris), 3)

    n = len(verts)
    vertex_class = np.zeros(n, dtype=np.int64)
    facet = np.full(n, -1, dtype=np.int64)
    facet2 = np.full(n, -1, dtype=np.int64)
    clamp_radius = None
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        clamp_radius = sidecar.get("clamp_radius")
        for key, rec in sidecar.get("classes", {}).items():
            i = int(key)
            cls = _NAME_CLASSES[rec["class"]]
            vertex_class[i] = cls
            if "facet" in rec:
                facet[i] = rec["facet"]
            if "facet2" in rec:
                facet2[i] = rec["facet2"]
    return TriMesh(vertices, triangles, vertex_class, facet, facet2, clamp_radius)
