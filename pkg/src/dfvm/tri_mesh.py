"""Conforming triangulations with node-centred Voronoi dual cells."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph_mesh import MeshError

ORIENT_TOL = 1e-12


class DelaunayWarning(UserWarning):
    """Negative Voronoi facet lengths were clamped to zero."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangulation with Voronoi-box data.

    Attributes
    ----------
    points : ndarray, shape (n_nodes, 2)
    triangles : ndarray, shape (n_elements, 3)
        Counterclockwise node triples.
    areas : ndarray, shape (n_elements,)
    edges : ndarray, shape (n_edges, 2)
        Unique node pairs ``(i, j)`` with ``i < j``.
    edge_lengths : ndarray, shape (n_edges,)
    edge_normals : ndarray, shape (n_edges, 2)
        Unit vector from ``edges[:, 0]`` to ``edges[:, 1]``.
    facet_lengths : ndarray, shape (n_edges,)
        Length of the Voronoi facet crossing each edge, clamped at zero.
    edge_triangles : ndarray, shape (n_edges, 2)
        Adjacent elements, ``-1`` where an edge lies on the boundary.
    dual_measures : ndarray, shape (n_nodes,)
        Voronoi dual-cell areas.
    n_clamped : int
        Number of facets whose signed length was negative.
    """

    points: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray
    edges: np.ndarray
    edge_lengths: np.ndarray
    edge_normals: np.ndarray
    facet_lengths: np.ndarray
    signed_facet_lengths: np.ndarray
    edge_triangles: np.ndarray
    dual_measures: np.ndarray
    n_clamped: int
    _node_edges: tuple
    _node_elements: tuple

    dim = 2

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_triangles[:, 1] < 0)

    def node_edges(self, i: int) -> list[tuple[int, int]]:
        """``(neighbor, edge index)`` pairs for the edges leaving node ``i``."""
        self._check_node(i)
        return list(self._node_edges[i])

    def node_elements(self, i: int) -> list[tuple[int, int, int]]:
        """``(element, mu1, mu2)`` with the two other nodes in counterclockwise order."""
        self._check_node(i)
        return list(self._node_elements[i])

    def edge_geometry(self, i: int, l: int) -> tuple[float, float, float]:
        """Length and unit direction ``(d, n1, n2)`` of the ``l``-th edge leaving ``i``."""
        nbr, e = self._edge(i, l)
        d = float(self.edge_lengths[e])
        sign = 1.0 if self.edges[e, 0] == i else -1.0
        n1, n2 = sign * self.edge_normals[e]
        return d, float(n1), float(n2)

    def voronoi_facet(self, i: int, l: int) -> dict:
        """Facet length of the ``l``-th edge leaving ``i`` plus its midpoint and direction."""
        nbr, e = self._edge(i, l)
        d, n1, n2 = self.edge_geometry(i, l)
        return {
            "length": float(self.facet_lengths[e]),
            "midpoint": tuple(0.5 * (self.points[i] + self.points[nbr])),
            "normal": (n1, n2),
            "neighbor": nbr,
        }

    def _edge(self, i, l):
        edges = self.node_edges(i)
        if not 0 <= l < len(edges):
            raise IndexError(f"edge index {l} out of range for node {i} with {len(edges)} edges")
        return edges[l]

    def _check_node(self, i):
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"node index {i} out of range for {self.n_nodes} nodes")

    def summary(self) -> dict:
        return {
            "kind": "2d-tri",
            "n_nodes": self.n_nodes,
            "n_elements": self.n_elements,
            "n_edges": self.n_edges,
            "n_boundary_edges": int(len(self.boundary_edges)),
            "total_area": float(self.areas.sum()),
            "dual_measure_sum": float(self.dual_measures.sum()),
            "min_facet_length": float(self.facet_lengths.min()),
            "n_clamped_facets": self.n_clamped,
        }


def build_tri_mesh(points, triangles, strict: bool = False) -> TriMesh:
    """Build a :class:`TriMesh` and its Voronoi duals.

    Triangles given clockwise are reoriented. Negative facet lengths, which
    appear on non-Delaunay meshes, are clamped to zero with a
    :class:`DelaunayWarning`; with ``strict=True`` they raise instead.
    """
    pts = np.asarray(points, dtype=float)
    tri = np.asarray(triangles)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise MeshError("points must be an (n, 2) array with n >= 3")
    if tri.ndim != 2 or tri.shape[1] != 3 or len(tri) < 1:
        raise MeshError("triangles must be a non-empty (n, 3) array")
    if np.any(tri != np.round(tri)):
        raise MeshError("triangle node indices must be integers")
    tri = tri.astype(np.int64)
    if tri.min() < 0 or tri.max() >= len(pts):
        raise MeshError("triangle references a node that does not exist")
    if len(np.unique(pts, axis=0)) != len(pts):
        raise MeshError("duplicate points")
    if np.any(np.bincount(tri.ravel(), minlength=len(pts)) == 0):
        raise MeshError("some points are not used by any triangle")

    p0, p1, p2 = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    e01, e02 = p1 - p0, p2 - p0
    cross = e01[:, 0] * e02[:, 1] - e01[:, 1] * e02[:, 0]
    scale = np.maximum(np.einsum("ij,ij->i", e01, e01), np.einsum("ij,ij->i", e02, e02))
    degenerate = np.abs(cross) <= ORIENT_TOL * scale
    if np.any(degenerate):
        raise MeshError(f"triangle {int(np.flatnonzero(degenerate)[0])} is degenerate")
    tri = tri.copy()
    cw = cross < 0
    tri[cw, 1], tri[cw, 2] = tri[cw, 2], tri[cw, 1].copy()
    areas = 0.5 * np.abs(cross)

    # local edge r of a triangle joins vertices r and r+1 and faces vertex r+2
    n_el = len(tri)
    a = tri
    b = np.roll(tri, -1, axis=1)
    c = np.roll(tri, -2, axis=1)
    directed = np.stack([a, b], axis=-1).reshape(-1, 2)
    keys = np.sort(directed, axis=1)
    edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts > 2):
        raise MeshError("nonconforming mesh: an edge is shared by more than two triangles")
    dup = np.unique(directed, axis=0, return_counts=True)[1]
    if np.any(dup > 1):
        raise MeshError("nonconforming mesh: two triangles traverse an edge in the same direction")

    # signed midpoint-to-circumcentre distance = (d/2) cot(opposite angle)
    pa, pb, pc = pts[a], pts[b], pts[c]
    u = pa - pc
    v = pb - pc
    dot = np.einsum("ijk,ijk->ij", u, v)
    crs = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    d_local = np.linalg.norm(pb - pa, axis=-1)
    s_local = 0.5 * d_local * dot / crs

    signed_L = np.bincount(inverse, weights=s_local.ravel(), minlength=len(edges))
    elem_of = np.repeat(np.arange(n_el), 3)
    edge_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    order = np.argsort(inverse, kind="stable")
    first = np.ones(len(order), dtype=bool)
    first[1:] = inverse[order][1:] != inverse[order][:-1]
    edge_triangles[inverse[order][first], 0] = elem_of[order][first]
    edge_triangles[inverse[order][~first], 1] = elem_of[order][~first]

    vec = pts[edges[:, 1]] - pts[edges[:, 0]]
    lengths = np.linalg.norm(vec, axis=1)
    normals = vec / lengths[:, None]

    tol = ORIENT_TOL * lengths
    bad = signed_L < -tol
    n_bad = int(bad.sum())
    if n_bad:
        msg = f"{n_bad} Voronoi facet(s) have negative length; the mesh is not Delaunay"
        if strict:
            raise MeshError(msg)
        warnings.warn(msg + "; clamping to zero", DelaunayWarning, stacklevel=2)
    facet = np.maximum(signed_L, 0.0)

    # kite area of vertex r: (d_r s_r + d_{r+2} s_{r+2}) / 4 over the two edges touching it
    contrib = 0.25 * (d_local * s_local + np.roll(d_local * s_local, 1, axis=1))
    dual = np.bincount(a.ravel(), weights=contrib.ravel(), minlength=len(pts))

    node_edges = [[] for _ in range(len(pts))]
    for e, (i, j) in enumerate(edges):
        node_edges[i].append((int(j), e))
        node_edges[j].append((int(i), e))
    node_elements = [[] for _ in range(len(pts))]
    for k, (i, j, l) in enumerate(tri):
        node_elements[i].append((k, int(j), int(l)))
        node_elements[j].append((k, int(l), int(i)))
        node_elements[l].append((k, int(i), int(j)))

    return TriMesh(
        points=_frozen(pts),
        triangles=_frozen(tri),
        areas=_frozen(areas),
        edges=_frozen(edges),
        edge_lengths=_frozen(lengths),
        edge_normals=_frozen(normals),
        facet_lengths=_frozen(facet),
        signed_facet_lengths=_frozen(signed_L),
        edge_triangles=_frozen(edge_triangles),
        dual_measures=_frozen(dual),
        n_clamped=n_bad,
        _node_edges=tuple(tuple(x) for x in node_edges),
        _node_elements=tuple(tuple(x) for x in node_elements),
    )


def rect_tri_mesh(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0, x0=(0.0, 0.0)) -> TriMesh:
    """Structured ``nx`` by ``ny`` grid of rectangles, each cut into two right triangles."""
    xs = x0[0] + np.linspace(0.0, lx, nx + 1)
    ys = x0[1] + np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    points = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    sw, se = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    nw, ne = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    triangles = np.concatenate([np.column_stack([sw, se, ne]), np.column_stack([sw, ne, nw])])
    return build_tri_mesh(points, triangles)


def load_tri_mesh(path, strict: bool = False) -> TriMesh:
    """Read ``{"points": [[x, y], ...], "triangles": [[i, j, k], ...]}`` (0-based)."""
    data = json.loads(Path(path).read_text())
    return tri_mesh_from_dict(data, strict=strict)


def tri_mesh_from_dict(data: dict, strict: bool = False) -> TriMesh:
    try:
        return build_tri_mesh(data["points"], data["triangles"], strict=strict)
    except KeyError as exc:
        raise MeshError(f"triangle mesh is missing key {exc.args[0]!r}") from None


def tri_mesh_to_dict(mesh: TriMesh) -> dict:
    return {"points": mesh.points.tolist(), "triangles": mesh.triangles.tolist()}


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr
