import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import Delaunay

from dfvm.graph_mesh import MeshError
from dfvm.tri_mesh import (
    DelaunayWarning,
    build_tri_mesh,
    load_tri_mesh,
    rect_tri_mesh,
    tri_mesh_to_dict,
)


# --- polygon-clipping Voronoi oracle ------------------------------------------

def _clip(poly, tags, normal, offset, tag):
    """Keep the part of ``poly`` with ``normal . x <= offset``; edge k runs from vertex k to k+1."""
    out, out_tags = [], []
    n = len(poly)
    tol = 1e-13 * (abs(offset) + np.abs(normal).sum())
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        fp, fq = normal @ p - offset, normal @ q - offset
        fp = 0.0 if abs(fp) <= tol else fp
        fq = 0.0 if abs(fq) <= tol else fq
        if fp <= 0:
            out.append(p)
            # a vertex on the cut line whose edge leaves the half-plane starts the cut edge
            out_tags.append(tag if fp == 0 and fq > 0 else tags[k])
        if (fp < 0 < fq) or (fq < 0 < fp):
            x = p + fp / (fp - fq) * (q - p)
            out.append(x)
            # the new vertex starts either the cut edge or the rest of the old edge
            out_tags.append(tag if fp < 0 else tags[k])
    return out, out_tags


def voronoi_cell(points, i, box):
    """Voronoi region of ``points[i]`` inside the rectangle ``box = (x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = box
    poly = [np.array(v, dtype=float) for v in [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]]
    tags = [-1] * 4
    pi = points[i]
    for j, pj in enumerate(points):
        if j == i:
            continue
        normal = pj - pi
        offset = normal @ (0.5 * (pi + pj))
        poly, tags = _clip(poly, tags, normal, offset, j)
    return poly, tags


def polygon_area(poly):
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def oracle_facet(points, i, j, box):
    poly, tags = voronoi_cell(points, i, box)
    n = len(poly)
    return sum(np.linalg.norm(poly[(k + 1) % n] - poly[k]) for k in range(n) if tags[k] == j)


# --- tests ----------------------------------------------------------------------

def unit_right_triangle():
    return build_tri_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])


def equilateral_pair(s=1.0):
    h = s * math.sqrt(3) / 2
    return build_tri_mesh([(0, 0), (s, 0), (s / 2, h), (s / 2, -h)], [(0, 1, 2), (0, 3, 1)])


class TestBuild:
    def test_unit_right_triangle(self):
        mesh = unit_right_triangle()
        assert mesh.areas[0] == 0.5
        assert sorted(mesh.edge_lengths) == pytest.approx([1.0, 1.0, math.sqrt(2)])
        np.testing.assert_allclose(mesh.dual_measures, [0.25, 0.125, 0.125])

    def test_square_split(self):
        mesh = rect_tri_mesh(1, 1)
        assert mesh.n_edges == 5
        assert mesh.edge_lengths.max() == pytest.approx(math.sqrt(2))

    def test_clockwise_triangles_reoriented(self):
        mesh = build_tri_mesh([(0, 0), (0, 1), (1, 0)], [(0, 1, 2)])
        p = mesh.points[mesh.triangles[0]]
        e1, e2 = p[1] - p[0], p[2] - p[0]
        assert e1[0] * e2[1] - e1[1] * e2[0] > 0

    def test_grid_tiles_unit_square(self):
        mesh = rect_tri_mesh(4, 4)
        assert abs(mesh.dual_measures.sum() - 1.0) <= 1e-12

    @pytest.mark.parametrize(
        "points, triangles, match",
        [
            ([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)], "degenerate"),
            ([(0, 0), (1, 0), (1, 0), (0, 1)], [(0, 1, 3)], "duplicate"),
            ([(0, 0), (1, 0), (0, 1), (5, 5)], [(0, 1, 2)], "not used"),
            ([(0, 0), (1, 0), (0, 1)], [(0, 1, 3)], "does not exist"),
            ([(0, 0), (1, 0), (0, 1), (1, 1)], [(0, 1, 2), (0, 1, 3)], "same direction"),
            (
                [(0, 0), (1, 0), (0, 1), (0, -1), (1, -1)],
                [(0, 1, 2), (1, 0, 3), (1, 0, 4)],
                "more than two",
            ),
        ],
    )
    def test_rejects(self, points, triangles, match):
        with pytest.raises(MeshError, match=match):
            build_tri_mesh(points, triangles)


class TestFacets:
    def test_equilateral_pair(self):
        mesh = equilateral_pair(2.0)
        i = [nbr for nbr, _ in mesh.node_edges(0)].index(1)
        assert mesh.voronoi_facet(0, i)["length"] == pytest.approx(2.0 / math.sqrt(3), rel=1e-12)

    def test_grid_interior_and_boundary_edges(self):
        h = 0.25
        mesh = rect_tri_mesh(4, 4)
        box = (0, 0, 1, 1)
        pts = np.asarray(mesh.points)
        for e, (i, j) in enumerate(mesh.edges):
            if abs(pts[i, 1] - pts[j, 1]) > 1e-12:
                continue
            expected = h / 2 if pts[i, 1] in (0.0, 1.0) else h
            assert mesh.facet_lengths[e] == pytest.approx(expected, abs=1e-12)
            assert oracle_facet(pts, i, j, box) == pytest.approx(expected, abs=1e-12)

    def test_obtuse_mesh_is_clamped_or_rejected(self):
        pts = [(0, 0), (1, 0), (0.5, 0.1), (0.5, -0.1)]
        tris = [(0, 1, 2), (0, 3, 1)]
        with pytest.warns(DelaunayWarning):
            mesh = build_tri_mesh(pts, tris)
        assert mesh.n_clamped == 1 and mesh.facet_lengths.min() == 0.0
        with pytest.raises(MeshError, match="Delaunay"):
            build_tri_mesh(pts, tris, strict=True)


class TestEdgeGeometry:
    @pytest.mark.filterwarnings("ignore::dfvm.tri_mesh.DelaunayWarning")
    @pytest.mark.parametrize(
        "other, expected",
        [((1, 0), (1, 1, 0)), ((0, 2), (2, 0, 1)), ((3, 4), (5, 0.6, 0.8))],
    )
    def test_examples(self, other, expected):
        mesh = build_tri_mesh([(0, 0), other, (-1, -1) if other != (1, 0) else (0, -1)], [(0, 1, 2)])
        l = [nbr for nbr, _ in mesh.node_edges(0)].index(1)
        assert mesh.edge_geometry(0, l) == pytest.approx(expected, rel=1e-15)

    def test_symmetric_across_edge(self):
        mesh = rect_tri_mesh(3, 2, 1.5, 0.7)
        for i in range(mesh.n_nodes):
            for l, (j, e) in enumerate(mesh.node_edges(i)):
                back = [nbr for nbr, _ in mesh.node_edges(j)].index(i)
                d1, a1, b1 = mesh.edge_geometry(i, l)
                d2, a2, b2 = mesh.edge_geometry(j, back)
                assert d1 == d2 and (a1, b1) == (-a2, -b2)
                assert mesh.voronoi_facet(i, l)["length"] == mesh.voronoi_facet(j, back)["length"]

    def test_bad_local_index(self):
        with pytest.raises(IndexError):
            unit_right_triangle().edge_geometry(0, 7)


class TestVoronoiOracle:
    @given(st.integers(1, 5), st.integers(1, 5), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_structured_grid_matches_clipping(self, nx, ny, lx, ly):
        mesh = rect_tri_mesh(nx, ny, lx, ly)
        pts = np.asarray(mesh.points)
        box = (0, 0, lx, ly)
        for i in range(mesh.n_nodes):
            poly, _ = voronoi_cell(pts, i, box)
            assert mesh.dual_measures[i] == pytest.approx(polygon_area(poly), rel=1e-10, abs=1e-12)
        for e, (i, j) in enumerate(mesh.edges):
            assert mesh.facet_lengths[e] == pytest.approx(oracle_facet(pts, i, j, box), abs=1e-10)

    @pytest.mark.filterwarnings("ignore::dfvm.tri_mesh.DelaunayWarning")
    def test_equilateral_lattice_matches_clipping(self):
        # interior node of a triangular lattice: regular hexagon of side s / sqrt(3)
        s = 1.0
        rows = []
        for r in range(5):
            for c in range(5):
                rows.append((c * s + 0.5 * s * (r % 2), r * s * math.sqrt(3) / 2))
        pts = np.array(rows)
        mesh = build_tri_mesh(pts, Delaunay(pts).simplices)
        centre = 12
        expected = 1.5 * math.sqrt(3) * (s / math.sqrt(3)) ** 2
        assert mesh.dual_measures[centre] == pytest.approx(expected, rel=1e-12)
        for nbr, e in mesh.node_edges(centre):
            assert mesh.facet_lengths[e] == pytest.approx(s / math.sqrt(3), rel=1e-12)


@st.composite
def point_clouds(draw):
    n = draw(st.integers(6, 40))
    seed = draw(st.integers(0, 2**31 - 1))
    return np.random.default_rng(seed).random((n, 2))


class TestProperties:
    @given(point_clouds())
    @settings(max_examples=40, deadline=None)
    def test_dual_cells_tile_domain(self, pts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DelaunayWarning)
            mesh = build_tri_mesh(pts, Delaunay(pts).simplices)
        assert mesh.dual_measures.sum() == pytest.approx(mesh.areas.sum(), rel=1e-10)

    @given(point_clouds())
    @settings(max_examples=40, deadline=None)
    def test_constant_field_has_zero_divergence(self, pts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DelaunayWarning)
            mesh = build_tri_mesh(pts, Delaunay(pts).simplices)
        boundary = set(np.asarray(mesh.edges)[mesh.boundary_edges].ravel().tolist())
        for i in range(mesh.n_nodes):
            if i in boundary:
                continue
            flux = np.zeros(2)
            for l, (_, e) in enumerate(mesh.node_edges(i)):
                _, n1, n2 = mesh.edge_geometry(i, l)
                flux += mesh.signed_facet_lengths[e] * np.array([n1, n2])
            assert np.abs(flux).max() <= 1e-10 * max(1.0, np.abs(mesh.signed_facet_lengths).max())

    @given(st.integers(1, 8), st.integers(1, 8))
    @settings(max_examples=20, deadline=None)
    def test_structured_grids_are_delaunay(self, nx, ny):
        with warnings.catch_warnings():
            warnings.simplefilter("error", DelaunayWarning)
            mesh = rect_tri_mesh(nx, ny)
        assert mesh.n_clamped == 0 and np.all(mesh.dual_measures > 0)


class TestIO:
    def test_round_trip(self, tmp_path):
        mesh = rect_tri_mesh(3, 2)
        path = tmp_path / "tri.json"
        path.write_text(json.dumps(tri_mesh_to_dict(mesh)))
        back = load_tri_mesh(path)
        np.testing.assert_array_equal(back.points, mesh.points)
        np.testing.assert_array_equal(back.triangles, mesh.triangles)
        np.testing.assert_array_equal(back.dual_measures, mesh.dual_measures)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "tri.json"
        path.write_text(json.dumps({"points": [[0, 0], [1, 0], [0, 1]]}))
        with pytest.raises(MeshError, match="triangles"):
            load_tri_mesh(path)

    def test_summary(self):
        s = rect_tri_mesh(2, 2).summary()
        assert s["n_elements"] == 8 and s["dual_measure_sum"] == pytest.approx(1.0)
