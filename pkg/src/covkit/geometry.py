"""Planar geometry for coverage problems on a convex environment.

Convex polygons with half-plane clipping, Voronoi partitions restricted to
the environment, intersections of a cell with a closed disk (decomposed into
straight and circular boundary pieces), and the area of the lune swept
between two equal-radius disks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CoincidentAgentsError, DomainError, GeometryError

# Absolute tolerances are these relative figures scaled by the polygon
# diameter (or another length scale supplied by the caller).
EPS_REL = 1e-9
MIN_SEPARATION_REL = 1e-6

CHORD = "chord"
WALL = "wall"
ARC = "arc"


def as_point(p) -> np.ndarray:
    """Coerce to a finite float vector of shape (2,)."""
    q = np.asarray(p, dtype=float)
    if q.shape != (2,):
        raise GeometryError(f"expected a 2-vector, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise GeometryError(f"non-finite coordinates: {q}")
    return q


def cross2(a, b) -> float:
    """z-component of the 3-D cross product of two planar vectors."""
    return a[0] * b[1] - a[1] * b[0]


def point_segment_distance(q, a, b) -> float:
    """Euclidean distance from point q to the segment [a, b]."""
    q, a, b = np.asarray(q, float), np.asarray(a, float), np.asarray(b, float)
    e = b - a
    ee = float(e @ e)
    if ee == 0.0:
        return float(np.hypot(*(q - a)))
    t = float((q - a) @ e) / ee
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(q - (a + t * e))))


class ConvexPolygon:
    """Convex polygon given by counter-clockwise vertices.

    Vertices must be distinct, in CCW order, and describe a convex chain
    with non-empty interior.  The vertex array is copied and frozen.
    """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryError(f"vertex array must have shape (n, 2), got {v.shape}")
        if len(v) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon vertices must be finite")
        scale = float(np.max(np.abs(v))) + 1.0
        eps = EPS_REL * scale
        nxt = np.roll(v, -1, axis=0)
        if np.any(np.hypot(*(nxt - v).T) <= eps):
            raise GeometryError("repeated consecutive vertices")
        e = nxt - v
        turns = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        area2 = float(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))
        if area2 < 0 and np.all(turns <= eps * scale):
            raise GeometryError("vertices must be in counter-clockwise order")
        bad = np.nonzero(turns < -eps * scale)[0]
        if bad.size:
            # turns[k] is the turn taken at vertex k+1
            at = int(bad[0] + 1) % len(v)
            raise GeometryError(f"polygon is not convex at vertex {at}")
        if area2 <= (eps * scale):
            raise GeometryError("polygon interior is empty")
        v = v.copy()
        v.flags.writeable = False
        self.vertices = v

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def area(self) -> float:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))

    @cached_property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        w = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        c = (v + nxt) * w[:, None] / (6.0 * self.area)
        return c.sum(axis=0)

    @cached_property
    def diameter(self) -> float:
        return polygon_diameter(self)

    @cached_property
    def _edges(self):
        """Per-edge data (A, e) with e = B - A, edge k running A_k -> A_{k+1}."""
        v = self.vertices
        return v, np.roll(v, -1, axis=0) - v

    def edge(self, k: int):
        a, e = self._edges
        return a[k], a[k] + e[k]

    def contains(self, q, tol: float = 0.0) -> bool:
        q = np.asarray(q, float)
        a, e = self._edges
        return bool(np.all(e[:, 0] * (q[1] - a[:, 1]) - e[:, 1] * (q[0] - a[:, 0]) >= -tol))

    def contains_many(self, pts, tol: float = 0.0) -> np.ndarray:
        """Vectorized membership test for an (N, 2) array of points."""
        pts = np.asarray(pts, float)
        a, e = self._edges
        s = (e[None, :, 0] * (pts[:, None, 1] - a[None, :, 1])
             - e[None, :, 1] * (pts[:, None, 0] - a[None, :, 0]))
        return np.all(s >= -tol, axis=1)

    def __repr__(self):
        return f"ConvexPolygon({self.n} vertices, area={self.area:.6g})"


@dataclass(frozen=True, eq=False)
class ClosedBall:
    """Closed disk with the given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (np.isfinite(self.radius) and self.radius >= 0.0):
            raise GeometryError(f"ball radius must be finite and >= 0, got {self.radius}")


@dataclass(frozen=True, eq=False)
class BoundaryPiece:
    """One maximal piece of a region boundary.

    ``kind`` is "chord" (a Voronoi face shared with a neighbor), "wall"
    (a piece of the environment boundary), or "arc" (a piece of the disk
    boundary).  Arcs store the disk center/radius and a CCW angle interval
    with theta1 > theta0; straight pieces run start -> end in CCW order.
    """

    kind: str
    start: np.ndarray
    end: np.ndarray
    center: np.ndarray | None = None
    radius: float | None = None
    theta0: float | None = None
    theta1: float | None = None
    neighbor: int | None = None

    def __post_init__(self):
        if self.kind not in (CHORD, WALL, ARC):
            raise GeometryError(f"unknown boundary piece kind {self.kind!r}")
        object.__setattr__(self, "start", as_point(self.start))
        object.__setattr__(self, "end", as_point(self.end))
        if self.kind == ARC:
            if self.center is None or self.radius is None:
                raise GeometryError("arc pieces need a center and radius")
            object.__setattr__(self, "center", as_point(self.center))
            if not (self.theta1 is not None and self.theta0 is not None
                    and self.theta1 > self.theta0):
                raise GeometryError("arc angle interval must be non-degenerate")
            if not (-math.pi <= self.theta0 and self.theta1 < 3.0 * math.pi):
                raise GeometryError("arc angles out of the normalized range")

    @property
    def span(self) -> float:
        """Angular width of an arc piece."""
        if self.kind != ARC:
            raise GeometryError("span is defined for arcs only")
        return self.theta1 - self.theta0


@dataclass(frozen=True, eq=False)
class CellRegion:
    """Intersection of a convex cell with a closed disk centered in it.

    The boundary is the CCW chain of ``pieces``; straight pieces keep their
    provenance (neighbor face vs. environment wall) and arcs lie on the
    disk boundary.  The number of arc pieces is the arc count of the cell
    at this radius.
    """

    cell: ConvexPolygon
    ball: ClosedBall
    pieces: tuple[BoundaryPiece, ...]

    @property
    def owner(self) -> np.ndarray:
        return self.ball.center

    @property
    def arcs(self) -> tuple[BoundaryPiece, ...]:
        return tuple(p for p in self.pieces if p.kind == ARC)

    @property
    def arc_count(self) -> int:
        return sum(1 for p in self.pieces if p.kind == ARC)

    @property
    def chord_neighbors(self) -> tuple[int, ...]:
        """Indices of neighbors whose shared face contributes a chord."""
        return tuple(sorted({p.neighbor for p in self.pieces
                             if p.kind == CHORD and p.neighbor is not None}))

    def area(self) -> float:
        """Exact area from the boundary decomposition (Green's theorem)."""
        total = 0.0
        for p in self.pieces:
            if p.kind == ARC:
                c, r = p.center, p.radius
                ds = math.sin(p.theta1) - math.sin(p.theta0)
                dc = math.cos(p.theta0) - math.cos(p.theta1)
                total += 0.5 * (r * (c[0] * ds + c[1] * dc) + r * r * p.span)
            else:
                total += 0.5 * cross2(p.start, p.end)
        return total


def polygon_diameter(poly: ConvexPolygon) -> float:
    """Largest distance between two points of the polygon.

    For a convex polygon this is attained at a vertex pair, so the maximum
    pairwise vertex distance is exact.
    """
    v = poly.vertices
    d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def _edge_inside_intervals(vertices, a, b, eps):
    """Clip each polygon edge against the half-plane {q : a.q + b >= 0}.

    Returns a list of (edge index, t_lo, t_hi) sub-segments that lie inside,
    in traversal order, with 0 <= t_lo < t_hi <= 1 edge parameters.
    """
    segs = []
    n = len(vertices)
    g = vertices @ a + b
    for k in range(n):
        g0, g1 = g[k], g[(k + 1) % n]
        if g0 < -eps and g1 < -eps:
            continue
        lo, hi = 0.0, 1.0
        if g0 < 0.0 or g1 < 0.0:
            t = g0 / (g0 - g1)  # root of the linear interpolant
            if g0 < 0.0:
                lo = t
            else:
                hi = t
        if hi - lo > 1e-12:
            segs.append((k, lo, hi))
    return segs


def clip_halfplane(poly: ConvexPolygon, a, b, eps: float | None = None):
    """Intersect a convex polygon with the half-plane {q : a.q + b >= 0}.

    Returns a new ConvexPolygon, or None when the intersection is empty or
    degenerate (zero area within tolerance).
    """
    a = np.asarray(a, float)
    if eps is None:
        eps = EPS_REL * poly.diameter
    v = poly.vertices
    ascale = float(np.hypot(*a))
    if ascale == 0.0:
        raise GeometryError("half-plane normal must be non-zero")
    segs = _edge_inside_intervals(v, a, b, eps * ascale)
    if not segs:
        return None
    out = []
    for k, lo, hi in segs:
        A = v[k]
        e = v[(k + 1) % len(v)] - A
        for p in (A + lo * e, A + hi * e):
            if not out or np.hypot(*(p - out[-1])) > eps:
                out.append(p)
    # close the loop: drop a duplicated final vertex
    if len(out) > 1 and np.hypot(*(out[-1] - out[0])) <= eps:
        out.pop()
    if len(out) < 3:
        return None
    try:
        return ConvexPolygon(out)
    except GeometryError:
        return None  # sliver below tolerance


def bisector_halfplane(p_i, p_j):
    """Coefficients (a, b) of {q : a.q + b >= 0} = points at least as close to
    p_i as to p_j."""
    p_i, p_j = np.asarray(p_i, float), np.asarray(p_j, float)
    a = 2.0 * (p_i - p_j)
    b = float(p_j @ p_j - p_i @ p_i)
    return a, b


def check_admissible(environment: ConvexPolygon, points, tol: float | None = None) -> np.ndarray:
    """Validate an agent configuration: inside the environment, no near-coincidences.

    Returns the points as an (n, 2) float array.
    """
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"positions must have shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("positions must be finite")
    diam = environment.diameter
    eps = EPS_REL * diam if tol is None else tol
    for i, p in enumerate(pts):
        if not environment.contains(p, tol=eps):
            raise GeometryError(f"agent {i} at {tuple(p)} is outside the environment")
    if len(pts) > 1:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        min_d = math.sqrt(float(d2.min()))
        if min_d < MIN_SEPARATION_REL * diam:
            i, j = np.unravel_index(int(d2.argmin()), d2.shape)
            raise CoincidentAgentsError(
                f"agents {i} and {j} are separated by {min_d:.3e}, below the "
                f"minimum {MIN_SEPARATION_REL * diam:.3e}")
    return pts


def voronoi_cells(environment: ConvexPolygon, points) -> list[ConvexPolygon]:
    """Voronoi cells of the points, each restricted to the environment.

    The cells tile the environment; cell i is obtained by clipping the
    environment with the bisector half-plane of (i, j) for every j != i.
    """
    pts = check_admissible(environment, points)
    cells = []
    for i in range(len(pts)):
        cell = environment
        for j in range(len(pts)):
            if j == i:
                continue
            a, b = bisector_halfplane(pts[i], pts[j])
            cell = clip_halfplane(cell, a, b)
            if cell is None:  # pragma: no cover - impossible for admissible input
                raise GeometryError(f"Voronoi cell {i} collapsed")
        cells.append(cell)
    return cells


def classify_cell_edges(cell: ConvexPolygon, owner_index: int, points,
                        environment: ConvexPolygon, eps: float | None = None):
    """Label each cell edge as an environment wall (None) or a neighbor index.

    An edge lying on the environment boundary is a wall; otherwise it lies on
    the bisector with exactly one other point, found by matching distances
    from the edge midpoint.
    """
    pts = np.asarray(points, float)
    if eps is None:
        eps = 1e3 * EPS_REL * environment.diameter
    labels = []
    ev, ee = environment._edges
    for k in range(cell.n):
        a, b = cell.edge(k)
        mid = 0.5 * (a + b)
        # wall test: both endpoints on some environment edge line
        on_wall = False
        for m in range(environment.n):
            n_hat = np.array([-ee[m][1], ee[m][0]])
            n_hat = n_hat / np.hypot(*n_hat)
            if (abs((a - ev[m]) @ n_hat) <= eps and abs((b - ev[m]) @ n_hat) <= eps):
                on_wall = True
                break
        if on_wall:
            labels.append(None)
            continue
        d_own = np.hypot(*(mid - pts[owner_index]))
        best, best_gap = None, np.inf
        for j in range(len(pts)):
            if j == owner_index:
                continue
            gap = abs(np.hypot(*(mid - pts[j])) - d_own)
            if gap < best_gap:
                best, best_gap = j, gap
        labels.append(best if best_gap <= eps else None)
    return tuple(labels)


def cell_ball_region(cell: ConvexPolygon, ball: ClosedBall,
                     edge_neighbors=None, eps: float | None = None) -> CellRegion:
    """Decompose the boundary of ``cell`` intersected with ``ball``.

    The ball center must lie in the cell (boundary allowed).  Straight
    pieces inherit the provenance of the cell edge they came from via
    ``edge_neighbors`` (neighbor index or None for a wall); circle pieces
    become arcs.  Edges that merely graze the circle, with penetration
    below tolerance, are treated as not intersecting.
    """
    c, R = ball.center, ball.radius
    if R <= 0.0:
        raise GeometryError("region radius must be positive")
    if eps is None:
        eps = EPS_REL * max(cell.diameter, R)
    if not cell.contains(c, tol=10.0 * eps):
        raise GeometryError("ball center must lie in the cell")
    v = cell.vertices
    n = len(v)
    if edge_neighbors is None:
        edge_neighbors = (None,) * n
    elif len(edge_neighbors) != n:
        raise GeometryError("edge_neighbors must label every cell edge")

    subs = []  # (edge index, t_lo, t_hi) portions inside the closed ball
    for k in range(n):
        A = v[k]
        e = v[(k + 1) % n] - A
        L = np.hypot(*e)
        w = A - c
        # |w + t e|^2 = R^2
        a2 = float(e @ e)
        a1 = 2.0 * float(w @ e)
        a0 = float(w @ w) - R * R
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc <= 0.0:
            continue
        # near-tangent edges count as outside
        d_line = abs(cross2(e, c - A)) / L
        if R - d_line < eps:
            continue
        sq = math.sqrt(disc)
        t0 = (-a1 - sq) / (2.0 * a2)
        t1 = (-a1 + sq) / (2.0 * a2)
        lo, hi = max(0.0, t0), min(1.0, t1)
        if (hi - lo) * L <= eps:
            continue
        subs.append((k, lo, hi))

    pieces = []
    if not subs:
        # no edge meets the disk: the ball lies inside the cell
        start = c + np.array([-R, 0.0])
        pieces.append(BoundaryPiece(ARC, start, start, center=c, radius=R,
                                    theta0=-math.pi, theta1=math.pi))
        return CellRegion(cell=cell, ball=ball, pieces=tuple(pieces))

    endpoints = []
    for k, lo, hi in subs:
        A = v[k]
        e = v[(k + 1) % n] - A
        endpoints.append((A + lo * e, A + hi * e, edge_neighbors[k]))
    m = len(endpoints)
    for i, (p0, p1, nb) in enumerate(endpoints):
        kind = WALL if nb is None else CHORD
        pieces.append(BoundaryPiece(kind, p0, p1, neighbor=nb))
        q0 = endpoints[(i + 1) % m][0]
        if np.hypot(*(p1 - q0)) > 10.0 * eps:
            th0 = math.atan2(p1[1] - c[1], p1[0] - c[0])
            th1 = math.atan2(q0[1] - c[1], q0[0] - c[0])
            while th1 <= th0 + 1e-14:
                th1 += 2.0 * math.pi
            pieces.append(BoundaryPiece(ARC, p1, q0, center=c, radius=R,
                                        theta0=th0, theta1=th1))
    region = CellRegion(cell=cell, ball=ball, pieces=tuple(pieces))
    _check_closure(region, 100.0 * eps)
    return region


def _check_closure(region: CellRegion, tol: float):
    ps = region.pieces
    for i, p in enumerate(ps):
        q = ps[(i + 1) % len(ps)]
        gap = np.hypot(*(p.end - q.start))
        if gap > tol:
            raise GeometryError(
                f"region boundary does not close: gap {gap:.3e} after piece {i}")


def polygon_region(poly: ConvexPolygon, pole=None) -> CellRegion:
    """The whole polygon as a CellRegion about an interior pole.

    Uses a disk large enough to contain the polygon, so the boundary has no
    arcs.  Defaults to the area centroid as the pole.
    """
    pole = poly.centroid if pole is None else as_point(pole)
    reach = float(np.max(np.hypot(*(poly.vertices - pole).T)))
    return cell_ball_region(poly, ClosedBall(pole, (1.0 + 1e-9) * reach + 1e-12))


def lens_area(p, p_prev, R: float) -> float:
    """Area of B_R(p_prev) \\ B_R(p) for centers at most R apart.

    Closed form: with D = |p - p_prev| / 2 and sigma = arccos(D / R), the
    area equals R^2 (pi - 2 sigma) + 2 D sqrt(R^2 - D^2).
    """
    p, p_prev = as_point(p), as_point(p_prev)
    if not (np.isfinite(R) and R > 0.0):
        raise DomainError(f"radius must be positive, got {R}")
    d = float(np.hypot(*(p - p_prev)))
    if d > R * (1.0 + 1e-12):
        raise DomainError(f"center displacement {d} exceeds the radius {R}")
    D = min(0.5 * d, R)
    sigma = math.acos(min(1.0, D / R))
    return R * R * (math.pi - 2.0 * sigma) + 2.0 * D * math.sqrt(max(0.0, R * R - D * D))


LENS_BOUND_CONSTANT = (2.0 * math.sqrt(3.0) + 3.0) / 3.0
"""Constant in the sharp linear bound lens_area(p, p') <= C * R * |p - p'|."""


def ray_exit_parameter(poly: ConvexPolygon, origin, direction,
                       eps: float | None = None) -> float:
    """Largest t >= 0 with origin + t * direction inside the polygon.

    The origin must belong to the polygon.  Returns +inf only in the
    degenerate case of a zero direction.
    """
    origin = np.asarray(origin, float)
    direction = np.asarray(direction, float)
    if eps is None:
        eps = EPS_REL * poly.diameter
    if not poly.contains(origin, tol=10.0 * eps):
        raise GeometryError("ray origin must lie in the polygon")
    if np.hypot(*direction) == 0.0:
        return math.inf
    a, e = poly._edges
    t_max = math.inf
    for k in range(poly.n):
        denom = cross2(e[k], direction)
        if denom >= 0.0:
            continue  # moving parallel to or away from this edge
        t = cross2(e[k], origin - a[k]) / (-denom)
        t_max = min(t_max, max(0.0, t))
    return t_max


def clamp_to_polygon(poly: ConvexPolygon, p_from, p_to) -> np.ndarray:
    """Clamp a move from an inside point toward a target onto the polygon.

    Returns p_to when it is inside; otherwise the boundary point where the
    segment [p_from, p_to] leaves the polygon.
    """
    p_from = np.asarray(p_from, float)
    p_to = np.asarray(p_to, float)
    if poly.contains(p_to):
        return p_to
    t = ray_exit_parameter(poly, p_from, p_to - p_from)
    t = min(1.0, max(0.0, t))
    return p_from + t * (p_to - p_from)
