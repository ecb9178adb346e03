"""Coverage objectives for agent networks in a convex environment.

The central quantity is the network coverage value: each point of the
environment is served by its nearest agent, the service quality decays with
distance according to a non-increasing radial performance curve, and points
are weighted by a density field.  Because the curve is non-increasing, the
value decomposes over the Voronoi partition, and its gradient with respect
to an agent has two parts: a smooth interior integral over the agent's
cell, and one boundary line integral per jump of the curve, taken along the
circle arcs where the jump radius crosses the cell.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import (
    ClosedBall,
    ConvexPolygon,
    as_point,
    cell_ball_region,
    check_admissible,
    polygon_region,
    voronoi_cells,
)
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    arc_line_integral,
    comparison_slack,
    integrate_polar,
)

QUADRATIC = "quadratic"  # value(x) = offset - x^2
CONSTANT = "constant"    # value(x) = offset

_PIECE_KINDS = (QUADRATIC, CONSTANT)


@dataclass(frozen=True)
class DensityField:
    """Nonnegative weighting of the environment: Gaussian bumps plus a floor.

    ``gaussians`` is a sequence of (amplitude, (x, y) center, sharpness)
    triples contributing amplitude * exp(-sharpness * |q - center|^2) each;
    ``uniform_offset`` adds a constant everywhere.
    """

    gaussians: tuple = ()
    uniform_offset: float = 0.0

    def __post_init__(self):
        cleaned = []
        for amp, center, sharp in self.gaussians:
            amp, sharp = float(amp), float(sharp)
            cx, cy = (float(c) for c in center)
            if not (amp >= 0.0 and np.isfinite(amp)):
                raise DomainError("gaussian amplitude must be finite and >= 0")
            if not (sharp > 0.0 and np.isfinite(sharp)):
                raise DomainError("gaussian sharpness must be finite and > 0")
            if not (np.isfinite(cx) and np.isfinite(cy)):
                raise DomainError("gaussian center must be finite")
            cleaned.append((amp, (cx, cy), sharp))
        off = float(self.uniform_offset)
        if not (off >= 0.0 and np.isfinite(off)):
            raise DomainError("uniform offset must be finite and >= 0")
        object.__setattr__(self, "gaussians", tuple(cleaned))
        object.__setattr__(self, "uniform_offset", off)

    @classmethod
    def uniform(cls, value: float = 1.0) -> "DensityField":
        return cls(gaussians=(), uniform_offset=value)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, float)
        out = np.full(len(pts), self.uniform_offset)
        for amp, (cx, cy), sharp in self.gaussians:
            d2 = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2
            out += amp * np.exp(-sharp * d2)
        return out


@dataclass(frozen=True)
class Piece:
    """One differentiable piece of a performance curve."""

    kind: str
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _PIECE_KINDS:
            raise DomainError(f"unknown piece kind {self.kind!r}")
        if not np.isfinite(self.offset):
            raise DomainError("piece offset must be finite")
        object.__setattr__(self, "offset", float(self.offset))

    def value(self, x):
        if self.kind == QUADRATIC:
            return self.offset - np.square(x)
        return np.full_like(np.asarray(x, float), self.offset)

    def derivative(self, x):
        if self.kind == QUADRATIC:
            return -2.0 * np.asarray(x, float)
        return np.zeros_like(np.asarray(x, float))

    def gradient_weight(self, x):
        """-f'(x)/x, extended continuously through x = 0."""
        if self.kind == QUADRATIC:
            return np.full_like(np.asarray(x, float), 2.0)
        return np.zeros_like(np.asarray(x, float))


@dataclass(frozen=True)
class PerformanceFunction:
    """Piecewise radial performance curve on right-open intervals.

    Piece ``k`` applies on [breakpoints[k-1], breakpoints[k]); at a
    breakpoint the right piece is the active one.  The curve should be
    non-increasing overall; a piece that steps UP at a breakpoint is allowed
    but triggers a warning, since the gradient theory assumes decay.
    """

    pieces: tuple
    breakpoints: tuple = ()

    def __post_init__(self):
        pieces = tuple(self.pieces)
        bps = tuple(float(b) for b in self.breakpoints)
        if len(pieces) != len(bps) + 1:
            raise DomainError("need exactly one more piece than breakpoints")
        if any(not isinstance(p, Piece) for p in pieces):
            raise DomainError("pieces must be Piece instances")
        if any(b <= 0 or not np.isfinite(b) for b in bps):
            raise DomainError("breakpoints must be positive and finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "breakpoints", bps)
        for idx, radius, size in self.jumps():
            if size < 0.0:
                warnings.warn(
                    f"performance curve increases at breakpoint {radius:g}; "
                    "ascent guarantees assume a non-increasing curve",
                    RuntimeWarning, stacklevel=3)

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), x, side="right")

    def _dispatch(self, x, method: str):
        x = np.asarray(x, float)
        scalar = x.ndim == 0
        xs = np.atleast_1d(x)
        if np.any(xs < 0.0):
            raise DomainError("performance curves are defined for x >= 0")
        out = np.empty_like(xs)
        idx = self._piece_index(xs)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = getattr(piece, method)(xs[mask])
        return float(out[0]) if scalar else out

    def __call__(self, x):
        return self._dispatch(x, "value")

    def derivative(self, x):
        return self._dispatch(x, "derivative")

    def gradient_weight(self, x):
        """-f'(x)/x piecewise, finite at 0 for the supported piece kinds."""
        return self._dispatch(x, "gradient_weight")

    def jumps(self):
        """(index, radius, left value - right value) per breakpoint."""
        out = []
        for k, radius in enumerate(self.breakpoints):
            left = float(np.asarray(self.pieces[k].value(radius)))
            right = float(np.asarray(self.pieces[k + 1].value(radius)))
            out.append((k, radius, left - right))
        return tuple(out)

    def shifted(self, c: float) -> "PerformanceFunction":
        """The same curve raised by a constant (jumps are unchanged)."""
        moved = tuple(Piece(p.kind, p.offset + c) for p in self.pieces)
        return PerformanceFunction(moved, self.breakpoints)


def eval_performance(f: PerformanceFunction, x: float) -> float:
    """Value of the curve at a single radius; the right piece wins at jumps."""
    x = float(x)
    if x < 0.0:
        raise DomainError("performance curves are defined for x >= 0")
    return float(f(x))


def normalized(f: PerformanceFunction) -> PerformanceFunction:
    """Shift the curve so its value at 0 is exactly 0."""
    return f.shifted(-float(f(0.0)))


# ---------------------------------------------------------------------------
# Presets


def centroid_performance() -> PerformanceFunction:
    """Pure quadratic decay -x^2 with no cutoff."""
    return PerformanceFunction((Piece(QUADRATIC, 0.0),))


def area_performance(radius: float) -> PerformanceFunction:
    """Indicator of the service disk: 1 within ``radius``, 0 beyond."""
    radius = float(radius)
    if radius <= 0.0:
        raise DomainError("service radius must be positive")
    return PerformanceFunction((Piece(CONSTANT, 1.0), Piece(CONSTANT, 0.0)),
                               (radius,))


def mixed_continuous_performance(radius: float) -> PerformanceFunction:
    """Quadratic decay saturating continuously at -radius^2."""
    radius = float(radius)
    if radius <= 0.0:
        raise DomainError("service radius must be positive")
    return PerformanceFunction(
        (Piece(QUADRATIC, 0.0), Piece(CONSTANT, -(radius * radius))),
        (radius,))


def mixed_discontinuous_performance(radius: float, floor: float) -> PerformanceFunction:
    """Quadratic decay within ``radius``, constant ``floor`` beyond.

    A floor above -radius^2 makes the curve step up at the cutoff and is
    reported through the PerformanceFunction warning.
    """
    radius = float(radius)
    if radius <= 0.0:
        raise DomainError("service radius must be positive")
    return PerformanceFunction(
        (Piece(QUADRATIC, 0.0), Piece(CONSTANT, float(floor))), (radius,))


def truncate_performance(f: PerformanceFunction, r: float,
                         diameter: float) -> PerformanceFunction:
    """Replace the curve beyond r/2 with its value at the given diameter.

    The input must already satisfy f(0) = 0 (use :func:`normalized`).  The
    cutoff breakpoint is dropped when the curve is already constant at the
    tail value there.
    """
    r = float(r)
    diameter = float(diameter)
    if r <= 0.0 or r > 2.0 * diameter:
        raise DomainError("cutoff range must lie in (0, 2*diameter]")
    if abs(float(f(0.0))) > 1e-12:
        raise DomainError("normalize the curve to f(0) = 0 before truncating")
    half = 0.5 * r
    tail = float(f(diameter))
    keep = [b for b in f.breakpoints if b < half]
    kept_pieces = f.pieces[:len(keep) + 1]
    last = kept_pieces[-1]
    if last.kind == CONSTANT and last.offset == tail:
        # Monotonicity forces every dropped piece to equal the tail value.
        return PerformanceFunction(kept_pieces, tuple(keep))
    return PerformanceFunction(kept_pieces + (Piece(CONSTANT, tail),),
                               tuple(keep) + (half,))


# ---------------------------------------------------------------------------
# Values and gradients


@dataclass(frozen=True)
class JumpTerm:
    """Gradient contribution of one circle arc at one jump radius."""

    breakpoint_index: int
    arc_index: int
    vector: np.ndarray


@dataclass(frozen=True)
class GradientReport:
    """Per-agent gradient split into interior and jump-arc parts."""

    agent: int
    gradient: np.ndarray
    interior_term: np.ndarray
    jump_terms: tuple


def gradient_vectors(reports) -> np.ndarray:
    """Stack per-agent gradients from reports into an (n, 2) array."""
    return np.array([rep.gradient for rep in reports], float)


def _merged_spec(f: PerformanceFunction, spec: QuadratureSpec) -> QuadratureSpec:
    radii = sorted(set(spec.radial_breakpoints) | set(f.breakpoints))
    if tuple(radii) == spec.radial_breakpoints:
        return spec
    return spec.with_breakpoints(radii)


def _region_value(region, f, density, spec) -> float:
    fn = lambda pts, s: f(s) * density(pts)
    return float(integrate_polar(region, fn, spec, 1)[0])


def _jump_arc_terms(p, cell: ConvexPolygon, f: PerformanceFunction, density,
                    spec: QuadratureSpec) -> tuple:
    terms = []
    reach = float(np.max(np.hypot(*(cell.vertices - p).T)))
    for idx, radius, size in f.jumps():
        if size == 0.0 or radius >= reach:
            # A jump radius beyond the whole cell produces no arcs.
            continue
        clipped = cell_ball_region(cell, ClosedBall(p, radius))
        for k, arc in enumerate(clipped.arcs):
            vec = size * arc_line_integral(arc, density, spec)
            terms.append(JumpTerm(idx, k, vec))
    return tuple(terms)


def _cell_report(agent: int, p, cell: ConvexPolygon, f: PerformanceFunction,
                 density, spec: QuadratureSpec) -> GradientReport:
    region = polygon_region(cell, pole=p)

    def interior_fn(pts, s):
        w = f.gradient_weight(s) * density(pts)
        return (pts - p) * w[:, None]

    interior = integrate_polar(region, interior_fn, spec, 2)
    terms = _jump_arc_terms(p, cell, f, density, spec)
    gradient = interior + sum((t.vector for t in terms), np.zeros(2))
    return GradientReport(agent, gradient, interior, terms)


def cell_value_and_gradient(p, cell: ConvexPolygon, f: PerformanceFunction,
                            density, spec: QuadratureSpec = DEFAULT_SPEC):
    """One agent's value contribution and gradient over a fixed region.

    Fuses the value integral and the interior gradient integral into a
    single quadrature pass, then adds the jump arc terms.  Returns
    (value, gradient 2-vector).
    """
    p = as_point(p)
    if not cell.contains(p):
        raise DomainError("agent must lie in its assigned region")
    qspec = _merged_spec(f, spec)
    region = polygon_region(cell, pole=p)

    def fields(pts, s):
        phi = density(pts)
        w = f.gradient_weight(s) * phi
        return np.stack(
            [f(s) * phi, (pts[:, 0] - p[0]) * w, (pts[:, 1] - p[1]) * w],
            axis=1)

    value, gx, gy = integrate_polar(region, fields, qspec, 3)
    gradient = np.array([gx, gy])
    for term in _jump_arc_terms(p, cell, f, density, qspec):
        gradient = gradient + term.vector
    return float(value), gradient


def multicenter_value(environment: ConvexPolygon, points, f: PerformanceFunction,
                      density, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Network coverage value: best-agent performance integrated with density.

    Decomposes as the sum over agents of the curve integrated against the
    density over that agent's Voronoi cell.
    """
    pts = check_admissible(environment, points)
    qspec = _merged_spec(f, spec)
    total = 0.0
    for i, cell in enumerate(voronoi_cells(environment, pts)):
        region = polygon_region(cell, pole=pts[i])
        total += _region_value(region, f, density, qspec)
    return total


def multicenter_gradient(environment: ConvexPolygon, points,
                         f: PerformanceFunction, density,
                         spec: QuadratureSpec = DEFAULT_SPEC):
    """Exact per-agent gradients of the coverage value.

    Each report combines the smooth interior integral over the agent's cell
    with one arc line integral per jump radius crossing the cell.
    """
    pts = check_admissible(environment, points)
    qspec = _merged_spec(f, spec)
    cells = voronoi_cells(environment, pts)
    return [_cell_report(i, pts[i], cells[i], f, density, qspec)
            for i in range(len(pts))]


def one_center_value(p, cell: ConvexPolygon, f: PerformanceFunction, density,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Coverage value of a single agent over a fixed convex region."""
    p = as_point(p)
    if not cell.contains(p):
        raise DomainError("agent must lie in its assigned region")
    region = polygon_region(cell, pole=p)
    return _region_value(region, f, density, _merged_spec(f, spec))


def one_center_gradient(p, cell: ConvexPolygon, f: PerformanceFunction, density,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Gradient of the single-agent value with the region held fixed."""
    p = as_point(p)
    if not cell.contains(p):
        raise DomainError("agent must lie in its assigned region")
    report = _cell_report(0, p, cell, f, density, _merged_spec(f, spec))
    return report.gradient


def fixed_partition_value(environment: ConvexPolygon, points, cells,
                          f: PerformanceFunction, density,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Coverage value when agents keep assigned regions instead of cells.

    The regions must tile the environment (checked by area) and each agent
    must lie inside its own region.
    """
    pts = check_admissible(environment, points)
    cells = list(cells)
    if len(cells) != len(pts):
        raise DomainError("need exactly one region per agent")
    covered = sum(c.area for c in cells)
    if abs(covered - environment.area) > 1e-8 * environment.area:
        raise DomainError("regions do not tile the environment")
    total = 0.0
    for p, cell in zip(pts, cells):
        total += one_center_value(p, cell, f, density, spec)
    return total


def coverage_fraction(environment: ConvexPolygon, points, r: float, density,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Density mass within range r/2 of some agent, as a fraction of total."""
    pts = check_admissible(environment, points)
    if r <= 0.0:
        raise DomainError("sensing range must be positive")
    half = 0.5 * float(r)
    phi = lambda p, s: density(p)
    covered = 0.0
    for i, cell in enumerate(voronoi_cells(environment, pts)):
        clipped = cell_ball_region(cell, ClosedBall(pts[i], half))
        covered += float(integrate_polar(clipped, phi, spec, 1)[0])
    total = float(integrate_polar(polygon_region(environment), phi, spec, 1)[0])
    return covered / total


@dataclass(frozen=True)
class ApproximationBounds:
    """How well the truncated objective brackets the true one.

    ``beta`` is the ratio f(r/2) / f(diameter); ``excess`` is the density
    mass left uncovered by the r/2 service disks, scaled by the performance
    drop; ``excess_cap`` is its configuration-independent ceiling.  The
    sandwich flag reports whether
    truncated <= value <= beta * truncated < 0  and
    value <= truncated + excess held within ``slack``.
    """

    beta: float
    excess: float
    excess_cap: float
    value: float
    truncated_value: float
    slack: float
    sandwich_ok: bool


def approximation_bounds(environment: ConvexPolygon, points,
                         f: PerformanceFunction, r: float, density,
                         spec: QuadratureSpec = DEFAULT_SPEC) -> ApproximationBounds:
    """Evaluate the truncation bracket for a configuration.

    Requires f(0) = 0 and a strictly negative value at the environment
    diameter, so that the ratio bound is meaningful.
    """
    pts = check_admissible(environment, points)
    diam = environment.diameter
    if abs(float(f(0.0))) > 1e-12:
        raise DomainError("normalize the curve to f(0) = 0 first")
    f_diam = float(f(diam))
    if f_diam >= 0.0:
        raise DomainError("curve must be strictly negative at the diameter")
    half = 0.5 * float(r)
    f_half = float(f(half))
    beta = f_half / f_diam

    truncated = truncate_performance(f, r, diam)
    value = multicenter_value(environment, pts, f, density, spec)
    truncated_value = multicenter_value(environment, pts, truncated, density, spec)

    phi = lambda p, s: density(p)
    covered = 0.0
    for i, cell in enumerate(voronoi_cells(environment, pts)):
        clipped = cell_ball_region(cell, ClosedBall(pts[i], half))
        covered += float(integrate_polar(clipped, phi, spec, 1)[0])
    total = float(integrate_polar(polygon_region(environment), phi, spec, 1)[0])
    uncovered = max(total - covered, 0.0)
    drop = f_half - f_diam
    excess = drop * uncovered
    excess_cap = drop * total

    n = len(pts)
    slack = comparison_slack(
        spec, (value, truncated_value, excess), n_terms=2 * n + 2)
    upper = beta * truncated_value
    ok = (truncated_value <= value + slack
          and value <= upper + slack
          and upper < 0.0
          and value <= truncated_value + excess + slack
          and excess <= excess_cap + slack)
    return ApproximationBounds(beta, excess, excess_cap, value,
                               truncated_value, slack, ok)
