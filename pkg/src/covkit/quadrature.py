"""Deterministic adaptive quadrature over cell regions in polar form.

Regions produced by the geometry layer are star-shaped about the ball
center, so integrals are taken in polar coordinates about that point: each
boundary piece spans an angular interval, the radial extent under a piece
is the exact distance to it, and radial panels are split at every
configured breakpoint radius so that piecewise-defined integrands are
smooth on every panel.  Refinement doubles the panel count in both
directions until two consecutive levels agree to tolerance; there is no
randomized adaptivity, so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateMassError, DomainError, QuadratureAccuracyError
from .geometry import ARC, BoundaryPiece, CellRegion

_INITIAL_PANEL_ANGLE = math.pi / 4.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy and panelization parameters.

    ``radial_breakpoints`` are radii (measured from the region owner) where
    the integrand may jump or kink; radial panels never straddle them.
    """

    rel_tol: float = 1e-7
    abs_tol: float = 1e-10
    max_subdivisions: int = 12
    radial_breakpoints: tuple[float, ...] = ()
    theta_order: int = 16
    radial_order: int = 16
    radial_panel_width: float = 0.5

    def __post_init__(self):
        if self.rel_tol < 0 or self.abs_tol < 0 or self.rel_tol + self.abs_tol == 0:
            raise DomainError("tolerances must be non-negative and not both zero")
        if any(b <= 0 for b in self.radial_breakpoints):
            raise DomainError("radial breakpoints must be positive")
        bp = tuple(sorted(self.radial_breakpoints))
        object.__setattr__(self, "radial_breakpoints", bp)

    def with_breakpoints(self, radii) -> "QuadratureSpec":
        return QuadratureSpec(
            rel_tol=self.rel_tol, abs_tol=self.abs_tol,
            max_subdivisions=self.max_subdivisions,
            radial_breakpoints=tuple(float(r) for r in radii),
            theta_order=self.theta_order, radial_order=self.radial_order,
            radial_panel_width=self.radial_panel_width)


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _piece_angles(piece: BoundaryPiece, pole) -> tuple[float, float]:
    """CCW angular interval of a boundary piece as seen from the pole."""
    if piece.kind == ARC:
        return piece.theta0, piece.theta1
    v0 = piece.start - pole
    v1 = piece.end - pole
    a0 = math.atan2(v0[1], v0[0])
    a1 = math.atan2(v1[1], v1[0])
    span = (a1 - a0) % (2.0 * math.pi)
    return a0, a0 + span


def _piece_radius(piece: BoundaryPiece, pole, theta: np.ndarray) -> np.ndarray:
    """Distance from the pole to the piece along each direction theta."""
    if piece.kind == ARC:
        return np.full_like(theta, piece.radius)
    e = piece.end - piece.start
    num = (e[0] * (piece.start[1] - pole[1]) - e[1] * (piece.start[0] - pole[0]))
    num = -num  # cross(e, start - pole) with sign so that rho >= 0 inside the span
    d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    den = e[0] * d[..., 1] - e[1] * d[..., 0]
    r_max = max(float(np.hypot(*(piece.start - pole))),
                float(np.hypot(*(piece.end - pole))))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = -num / den
    rho = np.nan_to_num(rho, nan=0.0, posinf=r_max, neginf=0.0)
    return np.clip(rho, 0.0, r_max)


def _angular_splits(piece: BoundaryPiece, pole, breakpoints,
                    t0: float, t1: float) -> tuple[float, ...]:
    """Angles inside (t0, t1) where the distance to a chord piece crosses a
    breakpoint radius.

    A chord at perpendicular distance D from the pole (foot angle psi) is at
    distance D / cos(theta - psi), so it crosses radius b > D exactly at
    psi +- arccos(D / b).  Splitting the angular panels there keeps the
    radially-segmented integrand smooth panel by panel.
    """
    if piece.kind == ARC or not breakpoints:
        return ()
    e = piece.end - piece.start
    length = float(np.hypot(*e))
    if length <= 0.0:
        return ()
    u = e / length
    foot = piece.start + float((pole - piece.start) @ u) * u
    v = foot - pole
    dist = float(np.hypot(*v))
    if dist <= 1e-300:
        return ()  # the chord's line passes through the pole: rho is 0
    psi = math.atan2(v[1], v[0])
    two_pi = 2.0 * math.pi
    out = []
    for b in breakpoints:
        if b <= dist:
            continue
        dt = math.acos(dist / b)
        for cand in (psi - dt, psi + dt):
            t = t0 + (cand - t0) % two_pi
            if t0 + 1e-10 < t < t1 - 1e-10:
                out.append(t)
    return tuple(sorted(out))


# Ceiling on nodes per rule construction; a refinement this deep will not
# finish in reasonable memory, so fail with the accuracy error instead of
# letting the allocation take the process down.
_NODE_BUDGET = 6_000_000


def _build_nodes(region: CellRegion, spec: QuadratureSpec, level: int):
    """Node positions, distances to the owner, and area-weighted weights."""
    pole = region.owner
    xt, wt = _gauss_legendre(spec.theta_order)
    xr, wr = _gauss_legendre(spec.radial_order)
    pts_out, s_out, w_out = [], [], []
    n_nodes = 0
    for piece in region.pieces:
        t0, t1 = _piece_angles(piece, pole)
        if t1 - t0 <= 1e-14:
            continue
        cuts = (t0,) + _angular_splits(piece, pole, spec.radial_breakpoints,
                                       t0, t1) + (t1,)
        for sub0, sub1 in zip(cuts[:-1], cuts[1:]):
            span = sub1 - sub0
            if span <= 1e-14:
                continue
            n_pan = max(1, math.ceil(span / _INITIAL_PANEL_ANGLE)) * (1 << level)
            edges = sub0 + span * np.arange(n_pan + 1) / n_pan
            half = 0.5 * span / n_pan
            theta = ((edges[:-1, None] + half) + half * xt[None, :]).ravel()
            w_theta = np.tile(wt * half, n_pan)
            rho = _piece_radius(piece, pole, theta)
            bps = [b for b in spec.radial_breakpoints if b < float(rho.max())]
            seg_edges = np.array([0.0] + bps)
            cos_t, sin_t = np.cos(theta), np.sin(theta)
            for s_idx in range(len(seg_edges)):
                a = np.minimum(seg_edges[s_idx], rho)
                b = (np.minimum(seg_edges[s_idx + 1], rho)
                     if s_idx + 1 < len(seg_edges) else rho)
                length = float(np.max(b - a))
                if length <= 0.0:
                    continue
                k_pan = max(1, math.ceil(length / spec.radial_panel_width)) * (1 << level)
                n_nodes += theta.size * k_pan * spec.radial_order
                if n_nodes > _NODE_BUDGET:
                    raise QuadratureAccuracyError(
                        f"refinement level {level} needs more than "
                        f"{_NODE_BUDGET} nodes; the pole is too close to the "
                        "region boundary for this tolerance")
                frac = np.arange(k_pan + 1) / k_pan
                u = a[:, None] + (b - a)[:, None] * frac[None, :]  # (Nt, K+1)
                mid = 0.5 * (u[:, :-1] + u[:, 1:])
                hw = 0.5 * (u[:, 1:] - u[:, :-1])
                s = mid[:, :, None] + hw[:, :, None] * xr[None, None, :]  # (Nt, K, Lr)
                w_s = hw[:, :, None] * wr[None, None, :]
                pts = np.empty(s.shape + (2,))
                pts[..., 0] = pole[0] + s * cos_t[:, None, None]
                pts[..., 1] = pole[1] + s * sin_t[:, None, None]
                pts_out.append(pts.reshape(-1, 2))
                s_out.append(s.ravel())
                w_out.append((w_s * s * w_theta[:, None, None]).ravel())
    if not pts_out:
        return np.empty((0, 2)), np.empty(0), np.empty(0)
    return np.concatenate(pts_out), np.concatenate(s_out), np.concatenate(w_out)


def polar_nodes(region: CellRegion, spec: QuadratureSpec = DEFAULT_SPEC,
                level: int = 0):
    """A fixed quadrature rule over the region: (points, radii, weights).

    The area jacobian is folded into the weights, so the integral of g is
    approximately weights @ g(points).  Useful for fast repeated evaluation
    against many integrands; accuracy is fixed by the spec orders and the
    level, with no adaptive refinement.
    """
    return _build_nodes(region, spec, level)


def _integrate_level(region: CellRegion, fn, spec: QuadratureSpec,
                     n_components: int, level: int) -> np.ndarray:
    pts, s, w = _build_nodes(region, spec, level)
    if len(pts) == 0:
        return np.zeros(n_components)
    vals = np.asarray(fn(pts, s), float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return w @ vals


def integrate_polar(region: CellRegion, fn, spec: QuadratureSpec = DEFAULT_SPEC,
                    n_components: int = 1) -> np.ndarray:
    """Integrate a vectorized integrand over a region, polar about the owner.

    ``fn(points, radii)`` receives an (N, 2) array of evaluation points and
    the matching distances to the owner, and returns (N,) or
    (N, n_components) values.  Refines until two consecutive levels agree
    within ``max(abs_tol, rel_tol * |I|)`` per component.
    """
    prev = None
    for level in range(spec.max_subdivisions + 1):
        try:
            cur = _integrate_level(region, fn, spec, n_components, level)
        except QuadratureAccuracyError as exc:
            exc.estimate = prev
            raise
        if prev is not None:
            tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(cur))
            if np.all(np.abs(cur - prev) <= tol):
                return cur
        prev = cur
    raise QuadratureAccuracyError(
        f"no convergence after {spec.max_subdivisions} refinements", estimate=prev)


def comparison_slack(spec: QuadratureSpec, magnitudes, n_terms: int = 1) -> float:
    """Tolerance for comparing quantities assembled from n_terms integrals.

    Each integral is accurate to abs_tol + rel_tol * |value|, so inequalities
    between derived quantities are asserted with ten times the accumulated
    uncertainty.
    """
    total = sum(abs(float(m)) for m in magnitudes)
    return 10.0 * (n_terms * spec.abs_tol + spec.rel_tol * total)


def integrate_scalar(region: CellRegion, g, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integral of a scalar field over the region.

    ``g`` maps an (N, 2) point array to (N,) values.
    """
    out = integrate_polar(region, lambda pts, s: g(pts), spec, 1)
    return float(out[0])


def integrate_vector(region: CellRegion, G, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Componentwise integral of a vector field mapping (N, 2) to (N, 2)."""
    return integrate_polar(region, lambda pts, s: G(pts), spec, 2)


def mass_and_centroid(region: CellRegion, density,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, np.ndarray]:
    """Density mass of the region and the center of mass.

    Raises DegenerateMassError when the mass is numerically indistinguishable
    from zero.
    """

    def fields(pts, s):
        phi = density(pts)
        return np.stack([phi, phi * pts[:, 0], phi * pts[:, 1]], axis=1)

    m, mx, my = integrate_polar(region, fields, spec, 3)
    if m <= 100.0 * spec.abs_tol:
        raise DegenerateMassError(f"region mass {m:.3e} is numerically zero")
    return float(m), np.array([mx / m, my / m])


def polar_moment(region: CellRegion, p, density,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Second moment of the density about an arbitrary point p."""
    p = np.asarray(p, float)

    def fn(pts, s):
        d2 = (pts[:, 0] - p[0]) ** 2 + (pts[:, 1] - p[1]) ** 2
        return d2 * density(pts)

    return float(integrate_polar(region, fn, spec, 1)[0])


def arc_line_integral(arc: BoundaryPiece, density,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Integral of the outward disk normal weighted by the density over an arc.

    Returns the 2-vector R * integral of (cos t, sin t) density(c + R e(t)) dt.
    """
    if arc.kind != ARC:
        raise DomainError("arc_line_integral needs an arc boundary piece")
    c, R = arc.center, arc.radius
    xt, wt = _gauss_legendre(spec.theta_order)
    span = arc.span

    def level_value(level: int) -> np.ndarray:
        n_pan = max(1, math.ceil(span / _INITIAL_PANEL_ANGLE)) * (1 << level)
        edges = arc.theta0 + span * np.arange(n_pan + 1) / n_pan
        half = 0.5 * span / n_pan
        theta = ((edges[:-1, None] + half) + half * xt[None, :]).ravel()
        w = np.tile(wt * half, n_pan)
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = c[None, :] + R * normals
        phi = np.asarray(density(pts), float)
        return R * (w * phi) @ normals

    prev = None
    for level in range(spec.max_subdivisions + 1):
        cur = level_value(level)
        if prev is not None:
            tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(cur))
            if np.all(np.abs(cur - prev) <= tol):
                return cur
        prev = cur
    raise QuadratureAccuracyError(
        f"no convergence after {spec.max_subdivisions} refinements", estimate=prev)
