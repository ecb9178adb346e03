"""Ascent dynamics for coverage networks.

Three update rules share one evaluation pipeline: a forward-Euler step of
the gradient flow, a per-agent line search along the one-center gradient,
and a per-agent jump to a maximizer of the one-center objective inside the
frozen cell.  The discrete rules never decrease the coverage value, so the
value trace doubles as a Lyapunov monitor for convergence.

The line search brackets its step with a fixed (non-adaptive) quadrature
rule, which is cheap and deterministic, and then certifies the chosen step
with the accurate integrator before accepting it.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (DegenerateMassError, QuadratureAccuracyError,
                     ScenarioError, StepFailureError)
from .geometry import (MIN_SEPARATION_REL, ClosedBall, ConvexPolygon,
                       cell_ball_region, check_admissible, clamp_to_polygon,
                       polygon_region, ray_exit_parameter, voronoi_cells)
from .objective import (CONSTANT, QUADRATIC, DensityField, PerformanceFunction,
                        cell_value_and_gradient, one_center_value)
from .quadrature import (DEFAULT_SPEC, QuadratureSpec, mass_and_centroid,
                         polar_nodes)

CONTINUOUS_EULER = "continuous_euler"
LINE_SEARCH = "line_search"
MAX_STEP = "max_step"
ALGORITHMS = (CONTINUOUS_EULER, LINE_SEARCH, MAX_STEP)

# Relative tolerance of the equal-value bisection in the line search.
_BISECT_REL = 1e-6
# Halvings allowed when certifying a line-search step / shrinking dt.
_CERTIFY_LIMIT = 8
_DT_HALVING_LIMIT = 10
# Inner-iteration budget for per-cell maximizer searches.
_INNER_LIMIT = 200

# Fixed rule used for bracketing evaluations; accuracy comes from the
# certification pass, so low orders keep it fast.
_SEARCH_RULE = QuadratureSpec(rel_tol=1e-4, abs_tol=1e-7,
                              theta_order=8, radial_order=8)


def _frozen_points(points) -> np.ndarray:
    pts = np.array(points, float)
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete, validated run configuration.

    ``grad_tol=None`` means the run picks 1e-6 * (|initial value| + 1).
    ``seed`` is carried for provenance (used by scenario files that sample
    initial positions); the dynamics themselves are deterministic.
    """

    environment: ConvexPolygon
    agents: np.ndarray
    density: DensityField
    performance: PerformanceFunction
    r: float
    algorithm: str = LINE_SEARCH
    dt: float = 0.05
    max_steps: int = 10_000
    grad_tol: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ScenarioError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        pts = check_admissible(self.environment, self.agents)
        object.__setattr__(self, "agents", _frozen_points(pts))
        if not (np.isfinite(self.r) and self.r > 0.0):
            raise ScenarioError(f"sensing radius must be positive, got {self.r}")
        if self.algorithm == CONTINUOUS_EULER and not (
                np.isfinite(self.dt) and self.dt > 0.0):
            raise ScenarioError(f"dt must be positive for {CONTINUOUS_EULER}, got {self.dt}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise ScenarioError(f"max_steps must be a non-negative integer, got {self.max_steps}")
        object.__setattr__(self, "max_steps", int(self.max_steps))
        if self.grad_tol is not None and not self.grad_tol > 0.0:
            raise ScenarioError(f"grad_tol must be positive when given, got {self.grad_tol}")


@dataclass(frozen=True, eq=False)
class NetworkState:
    """An admissible configuration plus the objective it is scored against."""

    environment: ConvexPolygon
    positions: np.ndarray
    performance: PerformanceFunction
    density: DensityField

    def __post_init__(self):
        pts = check_admissible(self.environment, self.positions)
        object.__setattr__(self, "positions", _frozen_points(pts))

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "NetworkState":
        return cls(scenario.environment, scenario.agents,
                   scenario.performance, scenario.density)

    def replaced(self, positions) -> "NetworkState":
        return NetworkState(self.environment, positions,
                            self.performance, self.density)


@dataclass(frozen=True, eq=False)
class NetworkEvaluation:
    """Total value, per-cell contributions and gradients, and the cells."""

    value: float
    values: np.ndarray
    gradients: np.ndarray
    cells: tuple[ConvexPolygon, ...]

    @property
    def max_gradient_norm(self) -> float:
        if len(self.gradients) == 0:
            return 0.0
        return float(np.max(np.hypot(self.gradients[:, 0], self.gradients[:, 1])))


def evaluate_network(state: NetworkState,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> NetworkEvaluation:
    """Value and all one-center gradients of a configuration in one pass."""
    cells = voronoi_cells(state.environment, state.positions)
    values = np.empty(len(cells))
    grads = np.empty((len(cells), 2))
    for i, (p, cell) in enumerate(zip(state.positions, cells)):
        values[i], grads[i] = cell_value_and_gradient(
            p, cell, state.performance, state.density, spec)
    return NetworkEvaluation(float(values.sum()), values, grads, tuple(cells))


@dataclass(frozen=True, eq=False)
class StepDiagnostics:
    """Bookkeeping for one update: displacements and special-cased agents.

    ``flagged`` lists agents that needed a fallback or hit the cell
    boundary during their search; ``dt_used`` reports the (possibly
    halved) time step of a continuous update.
    """

    step_sizes: np.ndarray
    flagged: tuple[int, ...] = ()
    dt_used: float | None = None


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Snapshot after ``step`` updates (step 0 is the initial state)."""

    step: int
    positions: np.ndarray
    value: float
    max_gradient_norm: float
    step_sizes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen_points(self.positions))
        object.__setattr__(self, "step_sizes",
                           _frozen_points(self.step_sizes).reshape(-1))


@dataclass(frozen=True, eq=False)
class AscentReport:
    """Full trajectory of a run plus how and when it stopped."""

    records: tuple[StepRecord, ...]
    terminated_by: str
    final_value: float
    elapsed_seconds: float

    @property
    def n_steps(self) -> int:
        return len(self.records) - 1

    @property
    def positions(self) -> np.ndarray:
        return self.records[-1].positions

    def values(self) -> np.ndarray:
        return np.array([rec.value for rec in self.records])


def _min_gap(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return math.inf
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    return math.sqrt(float(d2.min()))


def _ensure_separated(env: ConvexPolygon, pts: np.ndarray, label: str) -> None:
    if _min_gap(pts) < MIN_SEPARATION_REL * env.diameter:
        raise StepFailureError(
            f"{label} update would bring two agents within the minimum separation")


def continuous_step(state: NetworkState, dt: float,
                    spec: QuadratureSpec = DEFAULT_SPEC,
                    evaluation: NetworkEvaluation | None = None):
    """One forward-Euler step of the gradient flow, clamped to the environment.

    If the full step would violate the minimum separation, dt is halved up
    to a small number of times before giving up.  Returns the new state and
    diagnostics (whose ``dt_used`` records any halving).
    """
    if evaluation is None:
        evaluation = evaluate_network(state, spec)
    env = state.environment
    pts = state.positions
    trial = float(dt)
    for _ in range(_DT_HALVING_LIMIT + 1):
        new = np.array([clamp_to_polygon(env, p, p + trial * g)
                        for p, g in zip(pts, evaluation.gradients)])
        if _min_gap(new) >= MIN_SEPARATION_REL * env.diameter:
            sizes = np.hypot(*(new - pts).T)
            return state.replaced(new), StepDiagnostics(step_sizes=sizes,
                                                        dt_used=trial)
        trial *= 0.5
    raise StepFailureError(
        f"agents stay within the minimum separation even after "
        f"{_DT_HALVING_LIMIT} dt halvings")


def _line_search_update(p, g, cell: ConvexPolygon, f: PerformanceFunction,
                        density, spec: QuadratureSpec, v0: float):
    """One bounded line-search update from p along g inside the cell.

    The equal-value parameter epsilon (smallest t > 0 where the profile
    t -> value(p + t g) returns to its start value) is bracketed by
    doubling and bisected to relative tolerance 1e-6; the update moves by
    half of it.  Probes use one fixed quadrature rule over the cell with
    radial panels aligned to the curve's jump radii about the start point,
    so each probe costs a dot product and comparisons are mutually
    consistent.  For curves with genuine jumps the chosen step is finally
    re-certified against the accurate value v0, since the fixed rule's
    error grows as the jump circles move off their aligned panels.

    Returns (point, exited, ok); exited means the profile was still above
    its start value where the ray leaves the cell (epsilon is then the
    exit parameter), ok means the step was certified to increase value.
    """
    t_exit = ray_exit_parameter(cell, p, g)
    rule = (_SEARCH_RULE.with_breakpoints(f.breakpoints)
            if f.breakpoints else _SEARCH_RULE)
    nodes, _, w = polar_nodes(polygon_region(cell, pole=p), rule, level=1)
    wphi = w * np.asarray(density(nodes), float)

    def profile(t: float) -> float:
        d = np.hypot(nodes[:, 0] - (p[0] + t * g[0]),
                     nodes[:, 1] - (p[1] + t * g[1]))
        return float(wphi @ f(d))

    h0 = profile(0.0)
    t_lo, t = 0.0, t_exit / 64.0
    exited = False
    while True:
        if t >= t_exit:
            t_hi = t_exit
            exited = profile(t_exit) > h0
            break
        if profile(t) > h0:
            t_lo, t = t, 2.0 * t
        else:
            t_hi = t
            break
    if exited:
        eps = t_exit
    else:
        while t_hi - t_lo > _BISECT_REL * t_hi:
            mid = 0.5 * (t_lo + t_hi)
            if profile(mid) > h0:
                t_lo = mid
            else:
                t_hi = mid
        eps = 0.5 * (t_lo + t_hi)
    jumpy = any(size != 0.0 for _, _, size in f.jumps())
    delta = 0.5 * eps
    for _ in range(_CERTIFY_LIMIT):
        cand = p + delta * g
        if delta > 0.0 and cell.contains(cand) and profile(delta) > h0:
            if not jumpy or one_center_value(cand, cell, f, density, spec) > v0:
                return cand, exited, True
        delta *= 0.5
    return np.asarray(p, float), exited, False


def line_search_step(state: NetworkState, spec: QuadratureSpec = DEFAULT_SPEC,
                     evaluation: NetworkEvaluation | None = None):
    """One synchronous bounded line-search update of every agent.

    Each agent moves along its one-center gradient by half the equal-value
    step inside its current cell, so its own contribution strictly
    increases and the move never leaves the cell.  Agents whose search
    cannot certify an increase are left in place with a warning; agents
    whose profile was still rising at the cell boundary are flagged.
    """
    if evaluation is None:
        evaluation = evaluate_network(state, spec)
    new = np.array(state.positions)
    sizes = np.zeros(len(new))
    flagged: list[int] = []
    for i, (p, cell) in enumerate(zip(state.positions, evaluation.cells)):
        g = evaluation.gradients[i]
        if np.hypot(*g) == 0.0:
            continue
        cand, exited, ok = _line_search_update(
            p, g, cell, state.performance, state.density, spec,
            evaluation.values[i])
        if not ok:
            warnings.warn(
                f"agent {i}: line search found no certified increase; skipped",
                RuntimeWarning, stacklevel=2)
            flagged.append(i)
            continue
        if exited:
            flagged.append(i)
        new[i] = cand
        sizes[i] = float(np.hypot(*(cand - p)))
    _ensure_separated(state.environment, new, "line-search")
    return state.replaced(new), StepDiagnostics(step_sizes=sizes,
                                                flagged=tuple(flagged))


def _maximizer_kind(f: PerformanceFunction) -> str:
    """Which specialized cell-maximizer applies to this performance curve."""
    kinds = tuple(piece.kind for piece in f.pieces)
    if kinds == (QUADRATIC,):
        return "cell_centroid"
    if kinds == (QUADRATIC, CONSTANT) and f.jumps()[0][2] == 0.0:
        return "ball_centroid"
    return "ascent"


@lru_cache(maxsize=8)
def _disk_rule(radius: float):
    """Fixed quadrature nodes on the disk of the given radius about 0."""
    half = 2.0 * radius
    box = ConvexPolygon([(-half, -half), (half, -half), (half, half), (-half, half)])
    region = cell_ball_region(box, ClosedBall((0.0, 0.0), radius))
    pts, _, w = polar_nodes(region, _SEARCH_RULE, level=1)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def _ball_centroid_fixed_point(p, cell: ConvexPolygon, radius: float, density,
                               spec: QuadratureSpec, scale: float):
    """Iterate q <- centroid(cell ∩ ball(q, radius)) to its fixed point.

    A translated-disk fixed rule does the bulk of the contraction cheaply;
    the adaptive integrator then polishes until the move stalls at its
    noise floor.  Returns (point, converged).
    """
    offsets, w = _disk_rule(float(radius))
    q = np.asarray(p, float)
    for _ in range(_INNER_LIMIT):
        pts = q + offsets
        inside = cell.contains_many(pts)
        if not np.any(inside):
            return q, False
        ww = w[inside] * np.asarray(density(pts[inside]), float)
        mass = float(ww.sum())
        if mass <= 0.0:
            return q, False
        cm = (ww @ pts[inside]) / mass
        move = float(np.hypot(*(cm - q)))
        q = cm
        if move <= 1e-4 * radius:
            break
    prev = math.inf
    for _ in range(_INNER_LIMIT):
        region = cell_ball_region(cell, ClosedBall(q, radius))
        _, cm = mass_and_centroid(region, density, spec)
        move = float(np.hypot(*(cm - q)))
        q = cm
        if move <= 1e-9 * scale:
            return q, True
        if move < 1e-6 * scale and move >= prev:
            # No longer contracting: we are at the integrator's noise floor.
            return q, True
        prev = move
    return q, False


def _inner_ascent_maximizer(p, cell: ConvexPolygon, f: PerformanceFunction,
                            density, spec: QuadratureSpec, grad_tol: float):
    """Line-search ascent of the one-center value inside a fixed cell.

    Returns (point, converged).  The search is done when the gradient norm
    drops below grad_tol or when no step along the gradient improves the
    value any more -- at a maximizer pinned to the cell boundary or a
    breakpoint circle the gradient need not vanish, so running out of
    improving steps is the natural stop there.  Only exhausting the
    iteration budget counts as a failure.
    """
    q = np.asarray(p, float)
    for _ in range(_INNER_LIMIT):
        v, g = cell_value_and_gradient(q, cell, f, density, spec)
        if np.hypot(*g) < grad_tol:
            return q, True
        cand, _, ok = _line_search_update(q, g, cell, f, density, spec, v)
        if not ok:
            return q, True
        q = cand
    return q, False


def max_step(state: NetworkState, spec: QuadratureSpec = DEFAULT_SPEC,
             evaluation: NetworkEvaluation | None = None,
             grad_tol: float | None = None):
    """Move every agent to a maximizer of its one-center value in its cell.

    A single quadratic piece admits the closed-form maximizer (the cell
    centroid); a quadratic piece continued by a constant at the same level
    admits the ball-centroid fixed point; anything else is handled by
    inner gradient ascent inside the frozen cell.  Agents whose inner
    iteration fails fall back to one line-search update and are flagged.
    """
    if evaluation is None:
        evaluation = evaluate_network(state, spec)
    if grad_tol is None:
        grad_tol = 1e-6 * (abs(evaluation.value) + 1.0)
    f = state.performance
    kind = _maximizer_kind(f)
    scale = state.environment.diameter
    new = np.array(state.positions)
    sizes = np.zeros(len(new))
    flagged: list[int] = []
    for i, (p, cell) in enumerate(zip(state.positions, evaluation.cells)):
        try:
            if kind == "cell_centroid":
                _, target = mass_and_centroid(polygon_region(cell, pole=p),
                                              state.density, spec)
                ok = True
            elif kind == "ball_centroid":
                target, ok = _ball_centroid_fixed_point(
                    p, cell, f.breakpoints[0], state.density, spec, scale)
            else:
                target, ok = _inner_ascent_maximizer(
                    p, cell, f, state.density, spec, grad_tol)
        except (DegenerateMassError, QuadratureAccuracyError):
            target, ok = np.asarray(p, float), False
        if not ok:
            flagged.append(i)
            g = evaluation.gradients[i]
            if np.hypot(*g) > 0.0:
                cand, _, cert = _line_search_update(
                    p, g, cell, f, state.density, spec, evaluation.values[i])
                target = cand if cert else np.asarray(p, float)
            else:
                target = np.asarray(p, float)
        new[i] = target
        sizes[i] = float(np.hypot(*(target - p)))
    _ensure_separated(state.environment, new, "max-step")
    return state.replaced(new), StepDiagnostics(step_sizes=sizes,
                                                flagged=tuple(flagged))


def run(scenario: Scenario, spec: QuadratureSpec = DEFAULT_SPEC,
        assert_monotone: bool = False,
        monotone_slack: float | None = None) -> AscentReport:
    """Iterate the scenario's algorithm to a small gradient or a step cap.

    Records every step.  With ``assert_monotone`` the discrete algorithms
    raise StepFailureError if the value trace ever drops by more than
    ``monotone_slack`` (default: 10 x the quadrature absolute tolerance).
    """
    start = time.perf_counter()
    state = NetworkState.from_scenario(scenario)
    if monotone_slack is None:
        monotone_slack = 10.0 * spec.abs_tol
    evaluation = evaluate_network(state, spec)
    grad_tol = (scenario.grad_tol if scenario.grad_tol is not None
                else 1e-6 * (abs(evaluation.value) + 1.0))
    n = len(state.positions)
    records = [StepRecord(0, state.positions, evaluation.value,
                          evaluation.max_gradient_norm, np.zeros(n))]
    discrete = scenario.algorithm != CONTINUOUS_EULER
    while True:
        if records[-1].max_gradient_norm < grad_tol:
            terminated = "grad_tol"
            break
        if len(records) - 1 >= scenario.max_steps:
            terminated = "max_steps"
            break
        if scenario.algorithm == CONTINUOUS_EULER:
            state, diag = continuous_step(state, scenario.dt, spec, evaluation)
        elif scenario.algorithm == LINE_SEARCH:
            state, diag = line_search_step(state, spec, evaluation)
        else:
            state, diag = max_step(state, spec, evaluation, grad_tol)
        evaluation = evaluate_network(state, spec)
        record = StepRecord(len(records), state.positions, evaluation.value,
                            evaluation.max_gradient_norm, diag.step_sizes)
        if discrete and assert_monotone and record.value < records[-1].value - monotone_slack:
            raise StepFailureError(
                f"value decreased by {records[-1].value - record.value:.3e} "
                f"at step {record.step} (allowed slack {monotone_slack:.3e})")
        records.append(record)
    return AscentReport(tuple(records), terminated, records[-1].value,
                        time.perf_counter() - start)
