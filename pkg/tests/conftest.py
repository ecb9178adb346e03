"""Shared helpers for the test suite."""

import numpy as np
from scipy.spatial import ConvexHull

from covkit.geometry import ConvexPolygon

# Benchmark environment shared across suites: an 8-gon hall with five
# Gaussian density hot spots.
BENCH_VERTICES = [
    (0.0, 0.0), (2.125, 0.0), (2.9325, 1.5), (2.975, 1.6), (2.9325, 1.7),
    (2.295, 2.1), (0.85, 2.3), (0.17, 1.2),
]
BENCH_GAUSSIANS = [
    (5.0, (2.0, 0.25), 6.0),
    (5.0, (1.0, 2.25), 6.0),
    (5.0, (1.9, 1.9), 6.0),
    (5.0, (2.35, 1.25), 6.0),
    (5.0, (0.1, 0.1), 6.0),
]


def bench_polygon() -> ConvexPolygon:
    return ConvexPolygon(BENCH_VERTICES)


def bench_density():
    from covkit.objective import DensityField

    return DensityField(gaussians=BENCH_GAUSSIANS)


def random_convex_polygon(rng, n_points=10, scale=1.0, offset=(0.0, 0.0)):
    """Convex hull of a random point cloud, as a ConvexPolygon."""
    while True:
        pts = rng.uniform(-1.0, 1.0, (n_points, 2)) * scale + np.asarray(offset)
        hull = ConvexHull(pts)
        verts = pts[hull.vertices]  # CCW for 2-D hulls
        if len(verts) >= 3:
            try:
                return ConvexPolygon(verts)
            except Exception:
                continue


def random_points_inside(poly: ConvexPolygon, rng, n, min_sep=None):
    """Rejection-sample n points inside the polygon, optionally separated."""
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    if min_sep is None:
        min_sep = 1e-3 * poly.diameter
    pts = []
    while len(pts) < n:
        batch = rng.uniform(lo, hi, (max(64, 4 * (n - len(pts))), 2))
        batch = batch[poly.contains_many(batch, tol=-1e-9 * poly.diameter)]
        for q in batch:
            if min_sep > 0.0 and pts and min(
                    np.hypot(*(q - p)) for p in pts) < min_sep:
                continue
            pts.append(q)
            if len(pts) == n:
                break
    return np.array(pts)
