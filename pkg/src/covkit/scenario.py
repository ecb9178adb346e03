"""Scenario files: small YAML documents describing runnable coverage setups.

A document holds the environment polygon, the density field, a performance
preset, the sensing radius, the agents (explicit positions or a count plus
seed for uniform-in-polygon sampling), and run parameters.  Parsing always
resolves agents to concrete positions, so serializing a parsed document
yields a replayable record of the exact run configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import ALGORITHMS, LINE_SEARCH, Scenario
from .errors import ScenarioError
from .geometry import MIN_SEPARATION_REL, ConvexPolygon
from .objective import (DensityField, PerformanceFunction, area_performance,
                        centroid_performance, mixed_continuous_performance,
                        mixed_discontinuous_performance)

PRESETS = ("centroid", "area", "mixed_continuous", "mixed_discontinuous")

_TOP_KEYS = {"polygon", "density", "performance", "r", "agents", "algorithm",
             "dt", "max_steps", "grad_tol", "seed", "outputs"}

_SAMPLING_CAP = 200_000


@dataclass(frozen=True, eq=False)
class ScenarioDocument:
    """A parsed scenario plus the file-level details needed to re-emit it."""

    scenario: Scenario
    preset: str
    params: dict = field(default_factory=dict)
    outputs: str = "out"


def _fail(path: str, message: str) -> ScenarioError:
    return ScenarioError(f"{path}: {message}")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _as_point(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise _fail(path, f"expected [x, y], got {value!r}")
    return (_as_float(value[0], path + "[0]"), _as_float(value[1], path + "[1]"))


def _parse_polygon(raw) -> ConvexPolygon:
    if not isinstance(raw, dict) or "vertices" not in raw:
        raise _fail("polygon", "expected a mapping with a 'vertices' list")
    verts = raw["vertices"]
    extra = set(raw) - {"vertices"}
    if extra:
        raise _fail("polygon", f"unknown keys {sorted(extra)}")
    if not isinstance(verts, list) or len(verts) < 3:
        raise _fail("polygon.vertices", "expected a list of at least 3 [x, y] pairs")
    pts = [_as_point(v, f"polygon.vertices[{k}]") for k, v in enumerate(verts)]
    return ConvexPolygon(pts)


def _parse_density(raw) -> DensityField:
    if raw is None:
        return DensityField.uniform()
    if not isinstance(raw, dict):
        raise _fail("density", "expected a mapping with 'gaussians' and/or 'uniform'")
    extra = set(raw) - {"gaussians", "uniform"}
    if extra:
        raise _fail("density", f"unknown keys {sorted(extra)}")
    uniform = _as_float(raw.get("uniform", 0.0), "density.uniform")
    bumps = []
    entries = raw.get("gaussians", [])
    if not isinstance(entries, list):
        raise _fail("density.gaussians", "expected a list")
    for k, entry in enumerate(entries):
        path = f"density.gaussians[{k}]"
        if not isinstance(entry, dict):
            raise _fail(path, "expected a mapping")
        extra = set(entry) - {"amplitude", "center", "sharpness"}
        if extra:
            raise _fail(path, f"unknown keys {sorted(extra)}")
        try:
            amp = _as_float(entry["amplitude"], path + ".amplitude")
            center = _as_point(entry["center"], path + ".center")
            sharp = _as_float(entry["sharpness"], path + ".sharpness")
        except KeyError as missing:
            raise _fail(path, f"missing key {missing.args[0]!r}") from None
        bumps.append((amp, center, sharp))
    if not bumps and uniform == 0.0:
        raise _fail("density", "density is identically zero")
    return DensityField(gaussians=tuple(bumps), uniform_offset=uniform)


def build_performance(preset: str, params: dict, r: float,
                      environment: ConvexPolygon) -> PerformanceFunction:
    """Construct the performance curve named by a preset.

    The curves with limited range use the radius r/2, matching the
    convention that two agents within distance r share coverage duties.
    """
    params = dict(params or {})
    if preset == "centroid":
        allowed = set()
    elif preset == "mixed_discontinuous":
        allowed = {"floor"}
    else:
        allowed = set()
    extra = set(params) - allowed
    if extra:
        raise _fail("performance.params", f"unknown keys {sorted(extra)} for preset {preset!r}")
    if preset == "centroid":
        return centroid_performance()
    if preset == "area":
        return area_performance(r / 2.0)
    if preset == "mixed_continuous":
        return mixed_continuous_performance(r / 2.0)
    if preset == "mixed_discontinuous":
        floor = _as_float(params.get("floor", -environment.diameter ** 2),
                          "performance.params.floor")
        return mixed_discontinuous_performance(r / 2.0, floor)
    raise _fail("performance.preset", f"unknown preset {preset!r}; choose from {PRESETS}")


def _parse_performance(raw, r: float, environment: ConvexPolygon):
    if not isinstance(raw, dict) or "preset" not in raw:
        raise _fail("performance", "expected a mapping with a 'preset'")
    extra = set(raw) - {"preset", "params"}
    if extra:
        raise _fail("performance", f"unknown keys {sorted(extra)}")
    preset = raw["preset"]
    if preset not in PRESETS:
        raise _fail("performance.preset", f"unknown preset {preset!r}; choose from {PRESETS}")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise _fail("performance.params", "expected a mapping")
    return preset, params, build_performance(preset, params, r, environment)


def sample_positions(environment: ConvexPolygon, count: int,
                     seed: int) -> np.ndarray:
    """Uniform rejection sampling of admissible positions in the polygon."""
    rng = np.random.default_rng(seed)
    lo = environment.vertices.min(axis=0)
    hi = environment.vertices.max(axis=0)
    min_sep = MIN_SEPARATION_REL * environment.diameter
    picked: list[np.ndarray] = []
    for _ in range(_SAMPLING_CAP):
        cand = rng.uniform(lo, hi)
        if not environment.contains(cand):
            continue
        if picked and np.hypot(*(cand - np.array(picked)).T).min() < min_sep:
            continue
        picked.append(cand)
        if len(picked) == count:
            return np.array(picked)
    raise _fail("agents", f"could not sample {count} admissible positions")


def _parse_agents(raw, environment: ConvexPolygon, top_seed, forced: bool):
    if not isinstance(raw, dict):
        raise _fail("agents", "expected a mapping with 'positions' or 'count'")
    extra = set(raw) - {"positions", "count", "seed"}
    if extra:
        raise _fail("agents", f"unknown keys {sorted(extra)}")
    has_positions = "positions" in raw
    has_count = "count" in raw
    if has_positions == has_count:
        raise _fail("agents", "give exactly one of 'positions' or 'count'")
    if has_positions and not forced:
        entries = raw["positions"]
        if not isinstance(entries, list) or not entries:
            raise _fail("agents.positions", "expected a non-empty list of [x, y] pairs")
        pts = [_as_point(v, f"agents.positions[{k}]") for k, v in enumerate(entries)]
        return np.array(pts, float), top_seed
    if has_positions:
        # a forced seed re-samples the same number of agents
        count = len(raw["positions"]) if isinstance(raw["positions"], list) else 0
        if count < 1:
            raise _fail("agents.positions", "expected a non-empty list of [x, y] pairs")
    else:
        count = raw["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise _fail("agents.count", f"expected a positive integer, got {count!r}")
    seed = top_seed if forced else raw.get("seed", top_seed)
    if seed is None:
        raise _fail("agents.seed", "sampling needs a seed (agents.seed or top-level seed)")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise _fail("agents.seed", f"expected an integer, got {seed!r}")
    return sample_positions(environment, count, seed), seed


def parse_scenario(text: str, seed_override: int | None = None) -> ScenarioDocument:
    """Parse scenario YAML into a validated, agent-resolved document.

    ``seed_override`` replaces any seed in the document and forces agent
    positions to be re-sampled with it (keeping the agent count).
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"scenario is not valid YAML{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a key/value mapping")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ScenarioError(f"unknown top-level keys {sorted(extra)}")
    for key in ("polygon", "performance", "r", "agents"):
        if key not in raw:
            raise ScenarioError(f"missing required section {key!r}")
    environment = _parse_polygon(raw["polygon"])
    density = _parse_density(raw.get("density"))
    r = _as_float(raw["r"], "r")
    if not r > 0.0:
        raise _fail("r", f"sensing radius must be positive, got {r}")
    preset, params, performance = _parse_performance(raw["performance"], r, environment)
    top_seed = raw.get("seed")
    if top_seed is not None and (isinstance(top_seed, bool) or not isinstance(top_seed, int)):
        raise _fail("seed", f"expected an integer, got {top_seed!r}")
    forced = seed_override is not None
    if forced:
        top_seed = int(seed_override)
    agents, seed = _parse_agents(raw["agents"], environment, top_seed, forced)
    algorithm = raw.get("algorithm", LINE_SEARCH)
    if algorithm not in ALGORITHMS:
        raise _fail("algorithm", f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    dt = _as_float(raw.get("dt", 0.05), "dt")
    max_steps = raw.get("max_steps", 10_000)
    if isinstance(max_steps, bool) or not isinstance(max_steps, int) or max_steps < 0:
        raise _fail("max_steps", f"expected a non-negative integer, got {max_steps!r}")
    grad_tol = raw.get("grad_tol")
    if grad_tol is not None:
        grad_tol = _as_float(grad_tol, "grad_tol")
    outputs = raw.get("outputs", "out")
    if not isinstance(outputs, str) or not outputs:
        raise _fail("outputs", f"expected a non-empty string, got {outputs!r}")
    scenario = Scenario(environment=environment, agents=agents, density=density,
                        performance=performance, r=r, algorithm=algorithm,
                        dt=dt, max_steps=max_steps, grad_tol=grad_tol, seed=seed)
    return ScenarioDocument(scenario=scenario, preset=preset, params=params,
                            outputs=outputs)


def load_scenario(path, seed_override: int | None = None) -> ScenarioDocument:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text, seed_override=seed_override)


def serialize_scenario(doc: ScenarioDocument) -> str:
    """Canonical YAML for a document, with agents written out explicitly."""
    sc = doc.scenario
    data: dict = {
        "polygon": {"vertices": [[float(x), float(y)] for x, y in sc.environment.vertices]},
    }
    density = sc.density
    section: dict = {}
    if density.gaussians:
        section["gaussians"] = [
            {"amplitude": float(a), "center": [float(c[0]), float(c[1])],
             "sharpness": float(s)}
            for a, c, s in density.gaussians]
    if density.uniform_offset != 0.0 or not density.gaussians:
        section["uniform"] = float(density.uniform_offset)
    data["density"] = section
    performance: dict = {"preset": doc.preset}
    if doc.params:
        performance["params"] = {k: float(v) for k, v in sorted(doc.params.items())}
    data["performance"] = performance
    data["r"] = float(sc.r)
    data["agents"] = {"positions": [[float(x), float(y)] for x, y in sc.agents]}
    data["algorithm"] = sc.algorithm
    data["dt"] = float(sc.dt)
    data["max_steps"] = int(sc.max_steps)
    if sc.grad_tol is not None:
        data["grad_tol"] = float(sc.grad_tol)
    if sc.seed is not None:
        data["seed"] = int(sc.seed)
    data["outputs"] = doc.outputs
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def documents_equal(a: ScenarioDocument, b: ScenarioDocument) -> bool:
    """Field-by-field equality of two parsed documents."""
    sa, sb = a.scenario, b.scenario
    return (np.array_equal(sa.environment.vertices, sb.environment.vertices)
            and np.array_equal(sa.agents, sb.agents)
            and sa.density == sb.density
            and sa.performance == sb.performance
            and sa.r == sb.r
            and sa.algorithm == sb.algorithm
            and sa.dt == sb.dt
            and sa.max_steps == sb.max_steps
            and sa.grad_tol == sb.grad_tol
            and sa.seed == sb.seed
            and a.preset == b.preset
            and a.params == b.params
            and a.outputs == b.outputs)
