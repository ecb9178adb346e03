"""Command-line interface for coverage scenarios.

Subcommands: ``validate`` (check and describe a scenario), ``eval`` (metrics
for the initial configuration), ``graphs`` (write the six proximity graph
edge lists), ``run`` (ascent simulation with CSV outputs), and ``render``
(SVG snapshot of a frame).

Exit codes: 0 on success, 1 on a runtime failure, 2 on a validation
failure (bad scenario, bad geometry, bad request).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .dynamics import NetworkState, evaluate_network, run
from .errors import (CovkitError, DomainError, GeometryError, GraphMismatchError,
                     RenderError, ScenarioError)
from .geometry import polygon_region
from .objective import approximation_bounds, coverage_fraction, normalized
from .proximity import (delaunay_graph, disk_graph, euclidean_mst, gabriel_graph,
                        graph_intersection, is_connected, is_subgraph,
                        limited_delaunay_graph, r_delaunay_graph)
from .quadrature import integrate_polar
from .render import RenderSpec, render_frame
from .scenario import load_scenario, serialize_scenario

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2

TRAJECTORY_SCHEMA = "# covkit trajectory v1"
METRICS_SCHEMA = "# covkit metrics v1"
EVAL_SCHEMA = "# covkit eval v1"
EDGES_SCHEMA = "# covkit edge-list v1"

_VALIDATION_ERRORS = (ScenarioError, GeometryError, DomainError,
                      GraphMismatchError, RenderError)


def _load(args):
    return load_scenario(args.scenario, seed_override=args.seed)


def _out_dir(args, doc) -> Path:
    out = Path(args.out) if args.out else Path(doc.outputs)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _density_range(environment, density, n=200):
    lo = environment.vertices.min(axis=0)
    hi = environment.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = environment.contains_many(pts)
    vals = np.asarray(density(pts[inside]), float)
    return float(vals.min()), float(vals.max())


def cmd_validate(args) -> int:
    doc = _load(args)
    sc = doc.scenario
    env = sc.environment
    print(f"scenario: valid ({args.scenario})")
    print(f"polygon: convex with {env.n} vertices")
    print(f"diameter: {env.diameter:.6f}")
    area_phi = float(integrate_polar(polygon_region(env),
                                     lambda p, s: sc.density(p), n_components=1)[0])
    print(f"weighted area: {area_phi:.6f}")
    dlo, dhi = _density_range(env, sc.density)
    print(f"density: bounds [{dlo:.6f}, {dhi:.6f}] on a 200x200 grid")
    if dlo < 0.0:
        raise ScenarioError("density: negative values inside the environment")
    gaps = np.hypot(*(sc.agents[:, None, :] - sc.agents[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(gaps, np.inf)
    sep = float(gaps.min()) if len(sc.agents) > 1 else float("inf")
    print(f"agents: {len(sc.agents)} admissible (min separation {sep:.6g})")
    rising = [radius for _, radius, size in sc.performance.jumps() if size < 0.0]
    if rising:
        print(f"performance: increases at radius {rising[0]:.6g} (ascent not guaranteed)")
    else:
        print(f"performance: non-increasing ({len(sc.performance.pieces)} pieces, "
              f"{len(sc.performance.breakpoints)} breakpoints)")
    print(f"algorithm: {sc.algorithm} (r={sc.r:g}, max_steps={sc.max_steps})")
    return EXIT_OK


def _eval_metrics(doc):
    sc = doc.scenario
    evaluation = evaluate_network(NetworkState.from_scenario(sc))
    norms = [float(np.hypot(*g)) for g in evaluation.gradients]
    cover = coverage_fraction(sc.environment, sc.agents, sc.r, sc.density)
    try:
        bounds = approximation_bounds(sc.environment, sc.agents,
                                      normalized(sc.performance), sc.r, sc.density)
    except DomainError:
        bounds = None
    return evaluation, norms, cover, bounds


def cmd_eval(args) -> int:
    doc = _load(args)
    evaluation, norms, cover, bounds = _eval_metrics(doc)
    beta = bounds.beta if bounds else None
    excess = bounds.excess if bounds else None
    excess_cap = bounds.excess_cap if bounds else None
    if args.format == "json":
        payload = {
            "H": evaluation.value,
            "max_grad_norm": max(norms),
            "gradient_norms": norms,
            "beta": beta,
            "excess": excess,
            "excess_cap": excess_cap,
            "coverage_fraction": cover,
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK
    head = ["H", "max_grad_norm", "beta", "excess", "excess_cap",
            "coverage_fraction"]
    row = [evaluation.value, max(norms), beta, excess, excess_cap, cover]
    for i, norm in enumerate(norms):
        head.append(f"grad_norm_{i}")
        row.append(norm)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    print(EVAL_SCHEMA)
    writer.writerow(head)
    writer.writerow(["" if v is None else repr(v) for v in row])
    return EXIT_OK


def cmd_graphs(args) -> int:
    doc = _load(args)
    sc = doc.scenario
    builders = {
        "disk": lambda: disk_graph(sc.agents, sc.r),
        "delaunay": lambda: delaunay_graph(sc.environment, sc.agents),
        "r_delaunay": lambda: r_delaunay_graph(sc.environment, sc.agents, sc.r),
        "limited_delaunay": lambda: limited_delaunay_graph(sc.environment,
                                                           sc.agents, sc.r),
        "gabriel": lambda: gabriel_graph(sc.agents),
        "emst": lambda: euclidean_mst(sc.agents),
    }
    out = _out_dir(args, doc)
    graphs = {}
    for name, build in builders.items():
        graph = build()
        graphs[name] = graph
        lines = [f"{EDGES_SCHEMA} {name}"]
        lines += [f"{i} {j}" for i, j in graph.sorted_edges]
        (out / f"{name}.edges").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"{name}: {len(graph.edges)} edges")
    disk_cap_gabriel = graph_intersection(graphs["disk"], graphs["gabriel"])
    chain = (is_subgraph(disk_cap_gabriel, graphs["limited_delaunay"])
             and is_subgraph(graphs["limited_delaunay"], graphs["r_delaunay"]))
    print(f"inclusion disk*gabriel <= limited_delaunay <= r_delaunay: {chain}")
    same = is_connected(graphs["disk"]) == is_connected(graphs["limited_delaunay"])
    print(f"connectivity disk == limited_delaunay: {same}")
    print(f"emst edges == n-1: {len(graphs['emst'].edges) == len(sc.agents) - 1}")
    return EXIT_OK


def _write_run_outputs(out: Path, doc, report) -> list[Path]:
    sc = doc.scenario
    written = []
    try:
        path = out / "scenario.resolved.yaml"
        path.write_text(serialize_scenario(doc), encoding="utf-8")
        written.append(path)

        path = out / "trajectory.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(TRAJECTORY_SCHEMA + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["step", "agent", "x", "y"])
            for record in report.records:
                for agent, (x, y) in enumerate(record.positions):
                    writer.writerow([record.step, agent, repr(float(x)),
                                     repr(float(y))])
        written.append(path)

        path = out / "metrics.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(METRICS_SCHEMA + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["step", "H", "max_grad_norm", "coverage_fraction"])
            for record in report.records:
                cover = coverage_fraction(sc.environment, record.positions,
                                          sc.r, sc.density)
                writer.writerow([record.step, repr(record.value),
                                 repr(record.max_gradient_norm), repr(cover)])
        written.append(path)
    except BaseException:
        for path in written + [path]:
            path.unlink(missing_ok=True)
        raise
    return written


def cmd_run(args) -> int:
    doc = _load(args)
    out = _out_dir(args, doc)
    report = run(doc.scenario, assert_monotone=args.assert_monotone)
    _write_run_outputs(out, doc, report)
    print(f"terminated_by: {report.terminated_by}")
    print(f"steps: {report.n_steps}")
    print(f"final H: {report.final_value!r}")
    print(f"final max_grad_norm: {report.records[-1].max_gradient_norm!r}")
    print(f"outputs: {out}")
    return EXIT_OK


def _read_trajectory(path: Path):
    if not path.exists():
        raise RenderError(f"no trajectory at {path}; run the scenario first")
    frames: dict[int, dict[int, tuple[float, float]]] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        rows = [row for row in handle if not row.startswith("#")]
    for row in csv.DictReader(rows):
        step = int(row["step"])
        frames.setdefault(step, {})[int(row["agent"])] = (float(row["x"]),
                                                          float(row["y"]))
    steps = sorted(frames)
    n = len(frames[steps[0]])
    return steps, np.array([[frames[s][a] for a in range(n)] for s in steps])


def cmd_render(args) -> int:
    doc = _load(args)
    sc = doc.scenario
    out = _out_dir(args, doc)
    frame = args.frame
    if frame == "initial":
        positions, trails, tag = sc.agents, None, "initial"
    else:
        steps, track = _read_trajectory(out / "trajectory.csv")
        if frame == "final":
            upto = len(steps)
        else:
            try:
                want = int(frame)
            except ValueError:
                raise RenderError(
                    f"--frame must be 'initial', 'final', or a step number, got {frame!r}")
            if want not in steps:
                raise RenderError(f"step {want} not in trajectory (0..{steps[-1]})")
            upto = steps.index(want) + 1
        positions, trails = track[upto - 1], track[:upto]
        tag = "final" if frame == "final" else f"step{frame}"
    layers = ("density", "cells", "balls") if trails is None else \
        ("density", "cells", "balls", "trails")
    spec = RenderSpec(layers=layers)
    svg = render_frame(sc.environment, positions, sc.r, density=sc.density,
                       trails=trails, spec=spec)
    path = out / f"frame_{tag}.svg"
    path.write_text(svg, encoding="utf-8")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covkit",
        description="Limited-range coverage optimization for planar agent networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed and re-sample agents")
        p.add_argument("--out", default=None,
                       help="output directory (default: the scenario's 'outputs')")

    p = sub.add_parser("validate", help="check a scenario and describe the domain")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="metrics for the initial configuration")
    common(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("graphs", help="write the six proximity graph edge lists")
    common(p)
    p.set_defaults(func=cmd_graphs)

    p = sub.add_parser("run", help="run the ascent and write trajectory/metrics CSVs")
    common(p)
    p.add_argument("--assert-monotone", action="store_true",
                   help="fail the run if the objective ever decreases")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("render", help="render a frame to SVG")
    common(p)
    p.add_argument("--frame", default="initial",
                   help="initial, final, or a step number (default: initial)")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CovkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
