"""Static SVG snapshots of coverage configurations.

Renders the environment, Voronoi cells, the served regions (cell within the
half-range ball, shaded light gray), limited-Delaunay edges, trajectory
trails, and banded density contours.  The density bands are filled
superlevel sets traced by marching squares on a fixed grid; they are
decorative and carry no numerical guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RenderError
from .geometry import ClosedBall, ConvexPolygon, cell_ball_region, voronoi_cells
from .proximity import limited_delaunay_graph

LAYERS = ("density", "cells", "balls", "edges", "trails")

_BAND_COLORS = ("#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
                "#4292c6", "#2171b5", "#084594")
_TRAIL_COLOR = "#c44e52"
_AGENT_COLOR = "#222222"


@dataclass(frozen=True)
class RenderSpec:
    """What to draw and how large.

    ``layers`` picks any non-empty subset of :data:`LAYERS`; agent markers
    and the environment outline are always drawn.
    """

    width: int = 640
    height: int = 640
    layers: tuple = ("density", "cells", "balls")
    path: str = "frame.svg"
    margin: float = 16.0
    density_grid: int = 200
    bands: int = 6

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise RenderError("pick at least one layer to render")
        unknown = set(self.layers) - set(LAYERS)
        if unknown:
            raise RenderError(f"unknown layers {sorted(unknown)}; choose from {LAYERS}")
        if self.width <= 0 or self.height <= 0:
            raise RenderError("image dimensions must be positive")
        if self.density_grid < 2 or self.bands < 1:
            raise RenderError("need a density grid of at least 2 and one band")


class _Mapper:
    """Affine map from math coordinates (y up) to pixel coordinates (y down)."""

    def __init__(self, environment: ConvexPolygon, spec: RenderSpec):
        lo = environment.vertices.min(axis=0)
        hi = environment.vertices.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        usable_w = spec.width - 2.0 * spec.margin
        usable_h = spec.height - 2.0 * spec.margin
        self.scale = min(usable_w / span[0], usable_h / span[1])
        self.ox = spec.margin + 0.5 * (usable_w - self.scale * span[0]) - self.scale * lo[0]
        self.oy = spec.height - spec.margin - 0.5 * (usable_h - self.scale * span[1]) \
            + self.scale * lo[1]

    def point(self, q) -> tuple[float, float]:
        return (self.ox + self.scale * q[0], self.oy - self.scale * q[1])

    def fmt(self, q) -> str:
        x, y = self.point(q)
        return f"{x:.2f},{y:.2f}"


def _polygon_points(m: _Mapper, vertices) -> str:
    return " ".join(m.fmt(v) for v in vertices)


def _region_path(m: _Mapper, region) -> str:
    """SVG path for a cell-within-ball region, arcs rendered exactly."""
    pieces = region.pieces
    if len(pieces) == 1 and pieces[0].kind == "arc":
        cx, cy = m.point(pieces[0].center)
        rad = pieces[0].radius * m.scale
        return (f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{rad:.2f}"/>')
    parts = [f"M {m.fmt(pieces[0].start)}"]
    for piece in pieces:
        if piece.kind == "arc":
            rad = piece.radius * m.scale
            large = 1 if piece.span > math.pi else 0
            # math-CCW arcs run clockwise on screen, so the sweep flag is 0
            parts.append(f"A {rad:.2f} {rad:.2f} 0 {large} 0 {m.fmt(piece.end)}")
        else:
            parts.append(f"L {m.fmt(piece.end)}")
    parts.append("Z")
    return f'<path d="{" ".join(parts)}"/>'


def _band_fragments(xs, ys, values, threshold):
    """Filled superlevel-set fragments for one threshold, marching squares.

    Interior all-inside cells are merged into per-row rectangle runs; only
    boundary cells get interpolated polygon fragments.
    """
    inside = values >= threshold
    frags = []
    ny, nx = values.shape
    for j in range(ny - 1):
        run_start = None
        for i in range(nx - 1):
            flags = (inside[j, i], inside[j, i + 1],
                     inside[j + 1, i + 1], inside[j + 1, i])
            if all(flags):
                if run_start is None:
                    run_start = i
                continue
            if run_start is not None:
                frags.append([(xs[run_start], ys[j]), (xs[i], ys[j]),
                              (xs[i], ys[j + 1]), (xs[run_start], ys[j + 1])])
                run_start = None
            if not any(flags):
                continue
            corners = ((xs[i], ys[j], values[j, i]),
                       (xs[i + 1], ys[j], values[j, i + 1]),
                       (xs[i + 1], ys[j + 1], values[j + 1, i + 1]),
                       (xs[i], ys[j + 1], values[j + 1, i]))
            poly = []
            for k in range(4):
                ax, ay, av = corners[k]
                bx, by, bv = corners[(k + 1) % 4]
                if av >= threshold:
                    poly.append((ax, ay))
                if (av >= threshold) != (bv >= threshold):
                    t = (threshold - av) / (bv - av)
                    poly.append((ax + t * (bx - ax), ay + t * (by - ay)))
            if len(poly) >= 3:
                frags.append(poly)
        if run_start is not None:
            frags.append([(xs[run_start], ys[j]), (xs[nx - 1], ys[j]),
                          (xs[nx - 1], ys[j + 1]), (xs[run_start], ys[j + 1])])
    return frags


def _density_layer(m: _Mapper, environment: ConvexPolygon, density,
                   spec: RenderSpec) -> str:
    lo = environment.vertices.min(axis=0)
    hi = environment.vertices.max(axis=0)
    n = spec.density_grid
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    gx, gy = np.meshgrid(xs, ys)
    values = np.asarray(density(np.column_stack([gx.ravel(), gy.ravel()])),
                        float).reshape(n, n)
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin < 1e-12:
        thresholds = []
    else:
        thresholds = [vmin + (vmax - vmin) * (k + 1) / (spec.bands + 1)
                      for k in range(spec.bands)]
    parts = []
    for k, threshold in enumerate(thresholds):
        color = _BAND_COLORS[min(1 + k, len(_BAND_COLORS) - 1)]
        frags = _band_fragments(xs, ys, values, threshold)
        if not frags:
            continue
        path = " ".join(
            "M " + " L ".join(m.fmt(q) for q in poly) + " Z" for poly in frags)
        parts.append(f'<path d="{path}" fill="{color}" stroke="none"/>')
    return "\n".join(parts)


def render_frame(environment: ConvexPolygon, positions, r: float,
                 density=None, trails=None,
                 spec: RenderSpec = RenderSpec()) -> str:
    """Render one configuration frame to an SVG string.

    ``trails``, when given, is an array of shape (steps, n, 2) holding the
    trajectory that finished at ``positions``.  The density callable is
    required for the density layer, and ``trails`` for the trails layer.
    """
    positions = np.asarray(positions, float)
    m = _Mapper(environment, spec)
    env_pts = _polygon_points(m, environment.vertices)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<defs><clipPath id="envclip"><polygon points="{env_pts}"/></clipPath></defs>',
        f'<rect width="{spec.width}" height="{spec.height}" fill="#ffffff"/>',
    ]
    if "density" in spec.layers:
        if density is None:
            raise RenderError("the density layer needs a density field")
        out.append(f'<g id="density" clip-path="url(#envclip)" fill-rule="nonzero">'
                   f'\n{_density_layer(m, environment, density, spec)}\n</g>')
    cells = voronoi_cells(environment, positions)
    if "balls" in spec.layers:
        regions = [cell_ball_region(cell, ClosedBall(p, 0.5 * r))
                   for cell, p in zip(cells, positions)]
        body = "\n".join(_region_path(m, reg) for reg in regions)
        out.append(f'<g id="balls" fill="#d9d9d9" fill-opacity="0.75" '
                   f'stroke="#999999" stroke-width="0.8">\n{body}\n</g>')
    if "cells" in spec.layers:
        body = "\n".join(
            f'<polygon points="{_polygon_points(m, c.vertices)}"/>' for c in cells)
        out.append(f'<g id="cells" fill="none" stroke="#555555" '
                   f'stroke-width="1">\n{body}\n</g>')
    if "edges" in spec.layers:
        graph = limited_delaunay_graph(environment, positions, r)
        body = "\n".join(
            f'<line x1="{m.point(positions[i])[0]:.2f}" y1="{m.point(positions[i])[1]:.2f}" '
            f'x2="{m.point(positions[j])[0]:.2f}" y2="{m.point(positions[j])[1]:.2f}"/>'
            for i, j in graph.sorted_edges)
        out.append(f'<g id="edges" stroke="#2ca02c" stroke-width="1.2" '
                   f'stroke-dasharray="5,3">\n{body}\n</g>')
    if "trails" in spec.layers:
        if trails is None:
            raise RenderError("the trails layer needs trajectory data")
        trails = np.asarray(trails, float)
        body = "\n".join(
            f'<polyline points="{" ".join(m.fmt(q) for q in trails[:, a, :])}"/>'
            for a in range(trails.shape[1]))
        out.append(f'<g id="trails" fill="none" stroke="{_TRAIL_COLOR}" '
                   f'stroke-width="1" stroke-opacity="0.8">\n{body}\n</g>')
    markers = "\n".join(
        f'<circle cx="{m.point(p)[0]:.2f}" cy="{m.point(p)[1]:.2f}" r="3"/>'
        for p in positions)
    out.append(f'<g id="agents" fill="{_AGENT_COLOR}">\n{markers}\n</g>')
    out.append(f'<polygon points="{env_pts}" fill="none" stroke="#000000" '
               f'stroke-width="1.5" id="environment"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_frame(path, environment: ConvexPolygon, positions, r: float,
                density=None, trails=None, spec: RenderSpec = RenderSpec()) -> None:
    svg = render_frame(environment, positions, r, density=density,
                       trails=trails, spec=spec)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(svg)


__all__ = ["LAYERS", "RenderSpec", "render_frame", "write_frame"]
