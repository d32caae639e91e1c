"""Oriented 2D simplicial meshes with boundary classification.

Edges carry a global orientation (lower vertex index to higher vertex index).
Triangles are stored counterclockwise; ``tri_edges[t, k]`` is the edge opposite
local vertex ``k`` and ``tri_edge_signs[t, k]`` is +1 when the counterclockwise
traversal of that edge agrees with its global orientation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

# local edge k is opposite local vertex k, traversed counterclockwise
LOCAL_EDGES = ((1, 2), (2, 0), (0, 1))


class MeshError(ValueError):
    """Raised for malformed mesh input or unsupported topology."""


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(repr=False)
    tri_edges: np.ndarray = field(repr=False)
    tri_edge_signs: np.ndarray = field(repr=False)
    boundary_edges: np.ndarray = field(repr=False)
    boundary_vertices: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def h(self) -> float:
        """Largest edge length over all triangles."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.sqrt((d**2).sum(axis=1)).max())

    def signed_areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.triangles)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def from_triangles(vertices, triangles, *, check_topology: bool = True) -> Mesh:
    """Build a Mesh from coordinates and vertex triples.

    Clockwise triangles are reoriented with a warning. Dangling vertices,
    degenerate triangles and non simply connected meshes raise MeshError.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must have shape (nv, 2)")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
        raise MeshError("triangles must have shape (nt, 3) with nt >= 1")
    nv = len(vertices)
    if triangles.min() < 0 or triangles.max() >= nv:
        raise MeshError("triangle references a vertex index out of range")

    area = _signed_areas(vertices, triangles)
    if np.any(np.abs(area) <= 1e-14 * max(1.0, np.abs(area).max())):
        raise MeshError("degenerate triangle with zero area")
    cw = area < 0
    if cw.any():
        logger.warning("reoriented %d clockwise triangle(s)", int(cw.sum()))
        triangles[cw] = triangles[cw][:, [0, 2, 1]]

    used = np.zeros(nv, dtype=bool)
    used[triangles.ravel()] = True
    if not used.all():
        raise MeshError(f"dangling vertex {int(np.flatnonzero(~used)[0])} is not in any triangle")

    local = np.stack([triangles[:, list(pair)] for pair in LOCAL_EDGES], axis=1)  # (nt, 3, 2)
    lo = local.min(axis=2)
    hi = local.max(axis=2)
    keys = np.stack([lo.ravel(), hi.ravel()], axis=1)
    edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if counts.max() > 2:
        raise MeshError("non-manifold edge shared by more than two triangles")
    tri_edges = inverse.reshape(-1, 3)
    tri_edge_signs = np.where(local[:, :, 0] < local[:, :, 1], 1, -1).astype(np.int64)

    boundary_edges = np.flatnonzero(counts == 1)
    boundary_vertices = np.unique(edges[boundary_edges].ravel())

    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        tri_edge_signs=tri_edge_signs,
        boundary_edges=boundary_edges,
        boundary_vertices=boundary_vertices,
    )
    for arr in (mesh.vertices, mesh.triangles, mesh.edges, mesh.tri_edges, mesh.tri_edge_signs,
                mesh.boundary_edges, mesh.boundary_vertices):
        arr.setflags(write=False)
    if check_topology and mesh.euler_characteristic() != 1:
        raise MeshError(
            f"mesh is not simply connected: V - E + F = {mesh.euler_characteristic()} (expected 1)"
        )
    return mesh


def generate_structured(n: int) -> Mesh:
    """Unit square split into n x n squares, each cut along its (i,j)-(i+1,j+1) diagonal."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return from_triangles(vertices, tris)


def _data_lines(path: Path):
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise MeshError(f"mesh file not found: {path}") from None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line.split()


def load_mesh(path) -> Mesh:
    """Read a Triangle ``.node``/``.ele`` pair.

    ``path`` may name either file or the common stem. Indices are taken relative
    to the first vertex number declared in the .node file (1-based by default).
    """
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in (".node", ".ele") else path
    node_path, ele_path = stem.with_suffix(".node"), stem.with_suffix(".ele")

    try:
        rows = list(_data_lines(node_path))
        nv, dim = int(rows[0][0]), int(rows[0][1])
        if dim != 2:
            raise MeshError(f"{node_path}: only 2D meshes are supported, got dimension {dim}")
        if len(rows) - 1 < nv:
            raise MeshError(f"{node_path}: expected {nv} vertices, found {len(rows) - 1}")
        ids = [int(r[0]) for r in rows[1 : nv + 1]]
        base = ids[0]
        if ids != list(range(base, base + nv)):
            raise MeshError(f"{node_path}: vertex numbering must be consecutive")
        vertices = np.array([[float(r[1]), float(r[2])] for r in rows[1 : nv + 1]])

        rows = list(_data_lines(ele_path))
        nt, npt = int(rows[0][0]), int(rows[0][1])
        if npt != 3:
            raise MeshError(f"{ele_path}: only 3-node triangles are supported")
        if len(rows) - 1 < nt:
            raise MeshError(f"{ele_path}: expected {nt} triangles, found {len(rows) - 1}")
        triangles = np.array([[int(v) - base for v in r[1:4]] for r in rows[1 : nt + 1]])
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"cannot parse Triangle files at {stem}: {exc}") from exc
    return from_triangles(vertices, triangles)


def save_mesh(mesh: Mesh, stem) -> None:
    """Write ``stem.node`` and ``stem.ele`` (1-based)."""
    stem = Path(stem)
    with open(stem.with_suffix(".node"), "w") as f:
        f.write(f"{mesh.n_vertices} 2 0 0\n")
        for i, (x, y) in enumerate(mesh.vertices, start=1):
            f.write(f"{i} {float(x)!r} {float(y)!r}\n")
    with open(stem.with_suffix(".ele"), "w") as f:
        f.write(f"{mesh.n_triangles} 3 0\n")
        for i, t in enumerate(mesh.triangles, start=1):
            f.write(f"{i} {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def mesh_stats(mesh: Mesh) -> dict:
    v = mesh.vertices[mesh.triangles]  # (nt, 3, 3 vertices, 2)
    min_angle = math.pi
    for k in range(3):
        a = v[:, (k + 1) % 3] - v[:, k]
        b = v[:, (k + 2) % 3] - v[:, k]
        cos = (a * b).sum(axis=1) / np.sqrt((a * a).sum(axis=1) * (b * b).sum(axis=1))
        min_angle = min(min_angle, float(np.arccos(np.clip(cos, -1.0, 1.0)).min()))
    return {
        "vertices": mesh.n_vertices,
        "edges": mesh.n_edges,
        "triangles": mesh.n_triangles,
        "boundary_vertices": len(mesh.boundary_vertices),
        "boundary_edges": len(mesh.boundary_edges),
        "h": mesh.h,
        "min_angle_deg": math.degrees(min_angle),
        "euler_characteristic": mesh.euler_characteristic(),
    }
