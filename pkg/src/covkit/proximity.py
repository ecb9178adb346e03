"""Proximity graphs over planar agent configurations.

All constructions return undirected graphs on vertex set {0, ..., n-1}
with edges as canonical (i, j), i < j pairs.  Voronoi-based graphs use the
shared-face test: the bisector segment of a pair, clipped to the closer
half-planes of all other agents and to the environment, is the face
V_i n V_j; Delaunay adjacency means the face is non-empty (a single shared
point counts), and the limited variant additionally requires the face to
come within r/2 of both endpoints, which on the bisector reduces to a
point-to-segment distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, GraphMismatchError
from .geometry import EPS_REL, ConvexPolygon, check_admissible, cross2


@dataclass(frozen=True, eq=False)
class ProximityGraph:
    """Immutable undirected graph over an agent configuration."""

    positions: np.ndarray
    edges: frozenset

    def __post_init__(self):
        pts = np.asarray(self.positions, float).copy()
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise GeometryError("positions must have shape (n, 2)")
        pts.flags.writeable = False
        object.__setattr__(self, "positions", pts)
        n = len(pts)
        canon = set()
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise GeometryError(f"invalid edge ({i}, {j}) for {n} vertices")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        out = [j for i2, j in self.edges if i2 == i]
        out += [i2 for i2, j in self.edges if j == i]
        return tuple(sorted(out))

    def __repr__(self):
        return f"ProximityGraph(n={self.n}, edges={len(self.edges)})"


def _same_vertices(g1: ProximityGraph, g2: ProximityGraph):
    if g1.positions.shape != g2.positions.shape or not np.array_equal(
            g1.positions, g2.positions):
        raise GraphMismatchError("graphs are over different vertex sets")


def graph_intersection(g1: ProximityGraph, g2: ProximityGraph) -> ProximityGraph:
    _same_vertices(g1, g2)
    return ProximityGraph(g1.positions, g1.edges & g2.edges)


def graph_union(g1: ProximityGraph, g2: ProximityGraph) -> ProximityGraph:
    _same_vertices(g1, g2)
    return ProximityGraph(g1.positions, g1.edges | g2.edges)


def is_subgraph(g1: ProximityGraph, g2: ProximityGraph) -> bool:
    """True when every edge of g1 is an edge of g2 (same vertex set)."""
    _same_vertices(g1, g2)
    return g1.edges <= g2.edges


def is_connected(g: ProximityGraph) -> bool:
    n = g.n
    if n <= 1:
        return True
    adj = {i: [] for i in range(n)}
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


class _FaceClipper:
    """Clip the bisector line of a pair to a set of linear constraints.

    The bisector of (p, q) is parameterized as m + t u with m the midpoint
    and u the unit left-normal of q - p; constraints are kept in distance
    units so tolerances are geometric.
    """

    def __init__(self, p, q, t_span: float, eps: float):
        self.p = p
        self.d = float(np.hypot(*(q - p)))
        self.m = 0.5 * (p + q)
        u = np.array([-(q[1] - p[1]), q[0] - p[0]])
        self.u = u / np.hypot(*u)
        self.lo, self.hi = -t_span, t_span
        self.eps = eps

    def add(self, a, b):
        """Constraint a.q + b >= 0, with |a| used for normalization."""
        norm = float(np.hypot(*a))
        c0 = (float(a @ self.m) + b) / norm
        c1 = float(a @ self.u) / norm  # cosine between constraint normal and u
        if abs(c1) < 1e-14:
            if c0 < -self.eps:
                self.lo, self.hi = math.inf, -math.inf
            return
        t = -c0 / c1
        if c1 > 0.0:
            self.lo = max(self.lo, t)
        else:
            self.hi = min(self.hi, t)

    def add_closer_than(self, p_other):
        """Keep the part of the bisector at least as close to p as to p_other."""
        a = 2.0 * (self.p - p_other)
        b = float(p_other @ p_other - self.p @ self.p)
        self.add(a, b)

    def add_environment(self, env: ConvexPolygon):
        verts, edges = env._edges
        for k in range(env.n):
            e = edges[k]
            a = np.array([-e[1], e[0]])
            b = -float(a @ verts[k])
            self.add(a, b)

    @property
    def feasible(self) -> bool:
        return self.hi - self.lo >= -self.eps

    def min_distance_to_endpoint(self) -> float:
        """Min distance from p (equivalently q) to the clipped face.

        Distance along the bisector is hypot(d/2, t), convex in t, so the
        minimizer is the clamp of t = 0 into [lo, hi].
        """
        if not self.feasible:
            return math.inf
        if self.lo <= 0.0 <= self.hi:
            t = 0.0
        else:
            t = self.lo if abs(self.lo) < abs(self.hi) else self.hi
        return math.hypot(0.5 * self.d, t)


def _pair_face(i: int, j: int, pts, env: ConvexPolygon, eps: float) -> _FaceClipper:
    span = 4.0 * env.diameter
    face = _FaceClipper(pts[i], pts[j], span, eps)
    face.add_environment(env)
    for k in range(len(pts)):
        if k != i and k != j:
            face.add_closer_than(pts[k])
    return face


def delaunay_graph(environment: ConvexPolygon, points) -> ProximityGraph:
    """Edges between agents whose restricted Voronoi cells share a face.

    A shared boundary of positive length or a single shared point both
    count, so all diagonals of an exactly cocircular quadrilateral appear.
    """
    pts = check_admissible(environment, points)
    eps = EPS_REL * environment.diameter
    edges = set()
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if _pair_face(i, j, pts, environment, eps).feasible:
                edges.add((i, j))
    return ProximityGraph(pts, frozenset(edges))


def disk_graph(points, r: float) -> ProximityGraph:
    """Edges between agents at distance at most r."""
    pts = np.asarray(points, float)
    if not (np.isfinite(r) and r > 0.0):
        raise GeometryError(f"disk radius must be positive, got {r}")
    d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    edges = {(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))
             if d[i, j] <= r}
    return ProximityGraph(pts, frozenset(edges))


def r_delaunay_graph(environment: ConvexPolygon, points, r: float) -> ProximityGraph:
    """Intersection of the Delaunay graph with the r-disk graph."""
    return graph_intersection(delaunay_graph(environment, points),
                              disk_graph(points, r))


def limited_delaunay_graph(environment: ConvexPolygon, points, r: float) -> ProximityGraph:
    """Edges whose shared Voronoi face meets both r/2 balls.

    On the bisector the distances to both endpoints coincide, so the test
    is dist(p_i, face) <= r/2.
    """
    pts = check_admissible(environment, points)
    if not (np.isfinite(r) and r > 0.0):
        raise GeometryError(f"range must be positive, got {r}")
    edges = set()
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            eps = EPS_REL * max(r, float(np.hypot(*(pts[i] - pts[j]))))
            face = _pair_face(i, j, pts, environment, eps)
            if face.feasible and face.min_distance_to_endpoint() <= 0.5 * r + eps:
                edges.add((i, j))
    return ProximityGraph(pts, frozenset(edges))


def gabriel_graph(points) -> ProximityGraph:
    """Edges whose diametral disk contains no third agent in its interior."""
    pts = np.asarray(points, float)
    n = len(pts)
    scale = float(np.max(np.abs(pts))) + 1.0
    eps = EPS_REL * scale
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            m = 0.5 * (pts[i] + pts[j])
            rad = 0.5 * float(np.hypot(*(pts[i] - pts[j])))
            blocked = False
            for k in range(n):
                if k in (i, j):
                    continue
                if float(np.hypot(*(pts[k] - m))) < rad - eps:
                    blocked = True
                    break
            if not blocked:
                edges.add((i, j))
    return ProximityGraph(pts, frozenset(edges))


def euclidean_mst(points) -> ProximityGraph:
    """Kruskal minimum spanning tree of the complete Euclidean graph.

    Ties in edge length are broken on a canonical ordering derived from
    lexicographically sorted coordinates, so relabeling the agents
    relabels the tree edges identically.
    """
    pts = np.asarray(points, float)
    n = len(pts)
    if n == 0:
        raise GeometryError("need at least one point")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    canon = np.empty(n, dtype=int)
    canon[order] = np.arange(n)
    entries = []
    for i in range(n):
        for j in range(i + 1, n):
            w = float(np.hypot(*(pts[i] - pts[j])))
            ci, cj = sorted((int(canon[i]), int(canon[j])))
            entries.append((w, ci, cj, i, j))
    entries.sort()
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = set()
    for w, ci, cj, i, j in entries:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.add((i, j))
            if len(edges) == n - 1:
                break
    return ProximityGraph(pts, frozenset(edges))


def local_limited_delaunay(i: int, p_i, disk_neighbors, r: float,
                           environment: ConvexPolygon | None = None):
    """Limited-Delaunay neighbors of one agent from its disk neighborhood.

    ``disk_neighbors`` must hold exactly the positions of the other agents
    within distance r of ``p_i``.  Half-planes of agents farther than r
    cannot cut the face inside the r/2 ball, so the result matches the
    global graph row.  The environment polygon is shared static knowledge;
    passing it reproduces the environment-restricted faces exactly.

    Returns the indices into ``disk_neighbors`` that are neighbors.
    """
    p_i = np.asarray(p_i, float)
    nbrs = np.asarray(disk_neighbors, float)
    if nbrs.ndim != 2 or (len(nbrs) and nbrs.shape[1] != 2):
        raise GeometryError("disk_neighbors must have shape (m, 2)")
    if not (np.isfinite(r) and r > 0.0):
        raise GeometryError(f"range must be positive, got {r}")
    for k, q in enumerate(nbrs):
        d = float(np.hypot(*(q - p_i)))
        if d > r * (1.0 + 1e-9):
            raise GeometryError(
                f"neighbor {k} of agent {i} at distance {d:.6g} exceeds the range {r}")
    result = set()
    for j in range(len(nbrs)):
        eps = EPS_REL * max(r, float(np.hypot(*(p_i - nbrs[j]))))
        span = 4.0 * environment.diameter if environment is not None else 2.0 * r
        face = _FaceClipper(p_i, nbrs[j], span, eps)
        if environment is not None:
            face.add_environment(environment)
        for k in range(len(nbrs)):
            if k != j:
                face.add_closer_than(nbrs[k])
        if face.feasible and face.min_distance_to_endpoint() <= 0.5 * r + eps:
            result.add(j)
    return result
