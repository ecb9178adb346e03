import itertools
import math

import networkx as nx
import numpy as np
import pytest

from conftest import random_convex_polygon, random_points_inside
from covkit.errors import GeometryError, GraphMismatchError
from covkit.geometry import ConvexPolygon
from covkit.proximity import (
    ProximityGraph,
    delaunay_graph,
    disk_graph,
    euclidean_mst,
    gabriel_graph,
    graph_intersection,
    graph_union,
    is_connected,
    is_subgraph,
    limited_delaunay_graph,
    local_limited_delaunay,
    r_delaunay_graph,
)

BIG_SQUARE = ConvexPolygon([(-2, -2), (2, -2), (2, 2), (-2, 2)])
UNIT_SQUARE = ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])


def edge_set(graph):
    return set(graph.sorted_edges)


class TestDiskGraph:
    def test_basic(self):
        pts = [(0, 0), (0.5, 0), (2, 0)]
        g = disk_graph(pts, 1.0)
        assert edge_set(g) == {(0, 1)}
        g2 = disk_graph(pts, 1.5)
        assert edge_set(g2) == {(0, 1), (1, 2)}

    def test_boundary_inclusive(self):
        g = disk_graph([(0, 0), (1, 0)], 1.0)
        assert edge_set(g) == {(0, 1)}


class TestDelaunayGraph:
    def test_two_points(self):
        g = delaunay_graph(UNIT_SQUARE, [(0.25, 0.5), (0.75, 0.5)])
        assert edge_set(g) == {(0, 1)}

    def test_middle_blocks(self):
        pts = [(0.2, 0.5), (0.5, 0.5), (0.8, 0.5)]
        g = delaunay_graph(UNIT_SQUARE, pts)
        assert edge_set(g) == {(0, 1), (1, 2)}

    def test_cocircular_square_keeps_both_diagonals(self):
        pts = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        g = delaunay_graph(BIG_SQUARE, pts)
        # four sides plus both diagonals: the cells share the circumcenter
        assert edge_set(g) == {(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)}

    def test_perturbed_square_drops_one_diagonal(self):
        pts = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.52, 0.48)]
        g = delaunay_graph(BIG_SQUARE, pts)
        edges = edge_set(g)
        assert len(edges) == 5
        assert {(0, 1), (1, 2), (2, 3), (0, 3)} <= edges

    def test_planarity_bound(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            poly = random_convex_polygon(rng, scale=2.0)
            n = int(rng.integers(3, 20))
            pts = random_points_inside(poly, rng, n)
            g = delaunay_graph(poly, pts)
            assert len(g.edges) <= 3 * n - 6


class TestLimitedDelaunay:
    def test_equals_delaunay_for_huge_range(self):
        rng = np.random.default_rng(8)
        poly = random_convex_polygon(rng, scale=1.5)
        pts = random_points_inside(poly, rng, 9)
        r = 2.0 * poly.diameter
        assert edge_set(limited_delaunay_graph(poly, pts, r)) == edge_set(
            delaunay_graph(poly, pts))

    def test_r_delaunay_edge_without_face_in_range(self):
        # five agents: the pair (0, 1) is within range and Voronoi-adjacent,
        # but agent 2 pushes their shared face far below both range balls
        pts = np.array([
            (0.0, 0.0), (0.44, 0.0), (0.22, 0.03), (-1.5, 1.5), (1.5, 1.5)])
        r = 0.45
        rd = r_delaunay_graph(BIG_SQUARE, pts, r)
        ld = limited_delaunay_graph(BIG_SQUARE, pts, r)
        assert (0, 1) in edge_set(rd)
        assert (0, 1) not in edge_set(ld)
        assert is_subgraph(ld, rd)

    def test_adjacent_pair(self):
        g = limited_delaunay_graph(UNIT_SQUARE, [(0.4, 0.5), (0.6, 0.5)], 0.45)
        assert edge_set(g) == {(0, 1)}


class TestGabriel:
    def test_open_disk_blocking(self):
        blocked = gabriel_graph([(0, 0), (1, 0), (0.5, 0.1)])
        assert (0, 1) not in edge_set(blocked)
        on_circle = gabriel_graph([(0, 0), (1, 0), (0.5, 0.5)])
        assert (0, 1) in edge_set(on_circle)


class TestEMST:
    def test_square_corners(self):
        pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
        g = euclidean_mst(pts)
        edges = edge_set(g)
        assert len(edges) == 3
        total = sum(np.hypot(*(np.array(pts[i]) - pts[j])) for i, j in edges)
        assert total == pytest.approx(3.0)
        assert (0, 2) not in edges and (1, 3) not in edges

    def test_tree_size(self):
        rng = np.random.default_rng(17)
        pts = rng.uniform(0, 1, (12, 2))
        g = euclidean_mst(pts)
        assert len(g.edges) == 11
        assert is_connected(g)

    def test_against_networkx(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            pts = rng.uniform(0, 3, (int(rng.integers(2, 15)), 2))
            g = euclidean_mst(pts)
            gx = nx.Graph()
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    gx.add_edge(i, j, weight=float(np.hypot(*(pts[i] - pts[j]))))
            expected = {tuple(sorted(e)) for e in nx.minimum_spanning_tree(gx).edges}
            assert edge_set(g) == expected

    def test_tie_break_deterministic_and_equivariant(self):
        pts = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], float)
        base = edge_set(euclidean_mst(pts))
        for perm in itertools.permutations(range(4)):
            relabeled = pts[list(perm)]
            g = edge_set(euclidean_mst(relabeled))
            # map back: vertex k of the relabeled input is perm[k] originally
            mapped = {tuple(sorted((perm[i], perm[j]))) for i, j in g}
            assert mapped == base


class TestGraphOps:
    def test_set_operations(self):
        pts = np.array([(0, 0), (1, 0), (0, 1)], float)
        g1 = ProximityGraph(pts, frozenset({(0, 1), (1, 2)}))
        g2 = ProximityGraph(pts, frozenset({(1, 2), (0, 2)}))
        assert edge_set(graph_intersection(g1, g2)) == {(1, 2)}
        assert edge_set(graph_union(g1, g2)) == {(0, 1), (1, 2), (0, 2)}
        assert is_subgraph(graph_intersection(g1, g2), g1)
        assert not is_subgraph(g1, g2)

    def test_vertex_mismatch(self):
        g1 = ProximityGraph(np.zeros((2, 2)), frozenset())
        g2 = ProximityGraph(np.ones((2, 2)), frozenset())
        with pytest.raises(GraphMismatchError):
            graph_union(g1, g2)

    def test_connectivity(self):
        pts = np.zeros((4, 2))
        assert is_connected(ProximityGraph(pts[:1], frozenset()))
        assert not is_connected(ProximityGraph(pts, frozenset({(0, 1), (2, 3)})))
        assert is_connected(ProximityGraph(pts, frozenset({(0, 1), (1, 2), (2, 3)})))

    def test_edge_validation(self):
        with pytest.raises(GeometryError):
            ProximityGraph(np.zeros((3, 2)), frozenset({(0, 3)}))


class TestStructuralProperties:
    def test_inclusion_chains(self):
        rng = np.random.default_rng(29)
        for _ in range(40):
            poly = random_convex_polygon(rng, scale=2.0)
            n = int(rng.integers(3, 16))
            pts = random_points_inside(poly, rng, n)
            r = float(rng.uniform(0.1, 1.1)) * poly.diameter
            d = delaunay_graph(poly, pts)
            gab = gabriel_graph(pts)
            mst = euclidean_mst(pts)
            disk = disk_graph(pts, r)
            rd = r_delaunay_graph(poly, pts, r)
            ld = limited_delaunay_graph(poly, pts, r)
            assert is_subgraph(mst, gab)
            assert is_subgraph(gab, d)
            assert is_subgraph(graph_intersection(disk, gab), ld)
            assert is_subgraph(ld, rd)
            assert edge_set(rd) == edge_set(graph_intersection(disk, d))

    def test_connectivity_equivalence(self):
        rng = np.random.default_rng(37)
        seen_connected = seen_disconnected = 0
        for _ in range(40):
            poly = random_convex_polygon(rng, scale=2.0)
            n = int(rng.integers(3, 14))
            pts = random_points_inside(poly, rng, n)
            r = float(rng.uniform(0.15, 0.8)) * poly.diameter
            disk = disk_graph(pts, r)
            ld = limited_delaunay_graph(poly, pts, r)
            assert is_connected(disk) == is_connected(ld)
            if is_connected(disk):
                seen_connected += 1
            else:
                seen_disconnected += 1
        assert seen_connected and seen_disconnected

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(43)
        poly = random_convex_polygon(rng, scale=2.0)
        pts = random_points_inside(poly, rng, 8)
        r = 0.4 * poly.diameter
        builders = [
            lambda p: delaunay_graph(poly, p),
            lambda p: disk_graph(p, r),
            lambda p: r_delaunay_graph(poly, p, r),
            lambda p: limited_delaunay_graph(poly, p, r),
            lambda p: gabriel_graph(p),
            lambda p: euclidean_mst(p),
        ]
        perm = list(rng.permutation(len(pts)))
        for build in builders:
            base = edge_set(build(pts))
            relabeled = edge_set(build(pts[perm]))
            mapped = {tuple(sorted((perm[i], perm[j]))) for i, j in relabeled}
            assert mapped == base


class TestLocality:
    def test_matches_global_rows(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            poly = random_convex_polygon(rng, scale=2.0)
            pts = random_points_inside(poly, rng, 16)
            r = float(rng.uniform(0.2, 0.6)) * poly.diameter
            ld = limited_delaunay_graph(poly, pts, r)
            d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
            for i in range(len(pts)):
                nbr_idx = [j for j in range(len(pts)) if j != i and d[i, j] <= r]
                local = local_limited_delaunay(i, pts[i], pts[nbr_idx], r,
                                               environment=poly)
                assert {nbr_idx[k] for k in local} == set(ld.neighbors(i))

    def test_rejects_out_of_range_neighbor(self):
        with pytest.raises(GeometryError):
            local_limited_delaunay(0, (0.0, 0.0), [(2.0, 0.0)], 1.0)
