"""End-to-end command-line tests: exit codes, schemas, determinism, SVG."""

import csv
import json
from xml.dom import minidom

import numpy as np
import pytest

from covkit.cli import main

SQUARE = """
polygon:
  vertices: [[0, 0], [1, 0], [1, 1], [0, 1]]
density:
  uniform: 0.5
  gaussians:
    - {{amplitude: 1.5, center: [0.6, 0.55], sharpness: 4.0}}
performance:
  preset: {preset}
r: 0.4
agents:
  positions: [[0.22, 0.31], [0.71, 0.28], [0.48, 0.74], [0.83, 0.81]]
algorithm: {algorithm}
max_steps: {max_steps}
grad_tol: {grad_tol}
outputs: {outputs}
"""


def write_case(tmp_path, name="case.yaml", preset="mixed_continuous",
               algorithm="line_search", max_steps=25, grad_tol="2.0e-3",
               outputs=None, body=None):
    path = tmp_path / name
    outputs = outputs or str(tmp_path / "out")
    text = body if body is not None else SQUARE.format(
        preset=preset, algorithm=algorithm, max_steps=max_steps,
        grad_tol=grad_tol, outputs=outputs)
    path.write_text(text, encoding="utf-8")
    return path


class TestValidate:
    def test_valid_scenario(self, tmp_path, capsys):
        path = write_case(tmp_path)
        assert main(["validate", str(path)]) == 0
        out = capsys.readouterr().out
        assert "scenario: valid" in out
        diameter = float(next(l for l in out.splitlines()
                              if l.startswith("diameter:")).split()[1])
        assert diameter == pytest.approx(np.sqrt(2.0), abs=1e-6)
        assert "weighted area:" in out
        assert "performance: non-increasing" in out

    def test_nonconvex_polygon_names_vertex(self, tmp_path, capsys):
        body = SQUARE.format(preset="centroid", algorithm="line_search",
                             max_steps=5, grad_tol="1.0e-3",
                             outputs=str(tmp_path / "out"))
        body = body.replace("[[0, 0], [1, 0], [1, 1], [0, 1]]",
                            "[[0, 0], [1, 0], [0.4, 0.4], [0, 1]]")
        path = write_case(tmp_path, body=body)
        assert main(["validate", str(path)]) == 2
        assert "vertex" in capsys.readouterr().err

    def test_duplicate_agents(self, tmp_path, capsys):
        body = SQUARE.format(preset="centroid", algorithm="line_search",
                             max_steps=5, grad_tol="1.0e-3",
                             outputs=str(tmp_path / "out"))
        body = body.replace("[0.71, 0.28]", "[0.22, 0.31]")
        path = write_case(tmp_path, body=body)
        assert main(["validate", str(path)]) == 2

    def test_missing_file(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "absent.yaml")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_parse_error_location(self, tmp_path, capsys):
        path = tmp_path / "broken.yaml"
        path.write_text("polygon: [\n  oops", encoding="utf-8")
        assert main(["validate", str(path)]) == 2
        assert "line" in capsys.readouterr().err


class TestEval:
    def test_csv_shape(self, tmp_path, capsys):
        path = write_case(tmp_path, preset="centroid")
        assert main(["eval", str(path)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "# covkit eval v1"
        head = lines[1].split(",")
        row = next(csv.reader([lines[2]]))
        assert head[:6] == ["H", "max_grad_norm", "beta", "excess",
                            "excess_cap", "coverage_fraction"]
        assert sum(1 for h in head if h.startswith("grad_norm_")) == 4
        values = dict(zip(head, row))
        assert float(values["H"]) < 0.0
        assert 0.0 < float(values["coverage_fraction"]) <= 1.0
        assert float(values["beta"]) > 0.0

    def test_json_payload(self, tmp_path, capsys):
        path = write_case(tmp_path, preset="area")
        assert main(["eval", str(path), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"H", "max_grad_norm", "gradient_norms", "beta",
                                "excess", "excess_cap", "coverage_fraction"}
        assert len(payload["gradient_norms"]) == 4
        assert payload["beta"] is not None  # normalized disk indicator

    def test_single_agent_at_center_of_mass(self, tmp_path, capsys):
        body = SQUARE.format(preset="centroid", algorithm="line_search",
                             max_steps=5, grad_tol="1.0e-3",
                             outputs=str(tmp_path / "out"))
        body = body.replace(
            "positions: [[0.22, 0.31], [0.71, 0.28], [0.48, 0.74], [0.83, 0.81]]",
            "positions: [[0.5, 0.5]]")
        body = body.replace("density:\n  uniform: 0.5\n  gaussians:\n"
                            "    - {amplitude: 1.5, center: [0.6, 0.55], sharpness: 4.0}",
                            "density:\n  uniform: 1.0")
        path = write_case(tmp_path, body=body)
        assert main(["eval", str(path), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_grad_norm"] < 1e-8


class TestGraphs:
    def test_writes_six_edge_lists(self, tmp_path, capsys):
        path = write_case(tmp_path)
        out = tmp_path / "out"
        assert main(["graphs", str(path)]) == 0
        names = ["disk", "delaunay", "r_delaunay", "limited_delaunay",
                 "gabriel", "emst"]
        for name in names:
            lines = (out / f"{name}.edges").read_text().splitlines()
            assert lines[0] == f"# covkit edge-list v1 {name}"
            for line in lines[1:]:
                i, j = map(int, line.split())
                assert 0 <= i < j < 4
        assert len((out / "emst.edges").read_text().splitlines()) == 4
        text = capsys.readouterr().out
        assert "inclusion disk*gabriel <= limited_delaunay <= r_delaunay: True" in text
        assert "connectivity disk == limited_delaunay: True" in text


class TestRun:
    def test_outputs_and_schemas(self, tmp_path, capsys):
        path = write_case(tmp_path)
        out = tmp_path / "out"
        assert main(["run", str(path), "--assert-monotone"]) == 0
        stdout = capsys.readouterr().out
        assert "terminated_by:" in stdout and "final H:" in stdout

        traj = (out / "trajectory.csv").read_text().splitlines()
        assert traj[0] == "# covkit trajectory v1"
        assert traj[1] == "step,agent,x,y"
        metrics = (out / "metrics.csv").read_text().splitlines()
        assert metrics[0] == "# covkit metrics v1"
        assert metrics[1] == "step,H,max_grad_norm,coverage_fraction"
        n_steps = len(metrics) - 2
        assert len(traj) - 2 == 4 * n_steps
        assert (out / "scenario.resolved.yaml").exists()

        values = [float(row.split(",")[1]) for row in metrics[2:]]
        assert all(b >= a - 1e-8 for a, b in zip(values, values[1:]))
        fractions = [float(row.split(",")[3]) for row in metrics[2:]]
        assert all(0.0 < c <= 1.0 for c in fractions)

    def test_critical_start_single_row(self, tmp_path, capsys):
        body = SQUARE.format(preset="centroid", algorithm="max_step",
                             max_steps=10, grad_tol="1.0e-2",
                             outputs=str(tmp_path / "out"))
        body = body.replace(
            "positions: [[0.22, 0.31], [0.71, 0.28], [0.48, 0.74], [0.83, 0.81]]",
            "positions: [[0.5, 0.5]]")
        body = body.replace("density:\n  uniform: 0.5\n  gaussians:\n"
                            "    - {amplitude: 1.5, center: [0.6, 0.55], sharpness: 4.0}",
                            "density:\n  uniform: 1.0")
        path = write_case(tmp_path, body=body)
        assert main(["run", str(path)]) == 0
        metrics = (tmp_path / "out" / "metrics.csv").read_text().splitlines()
        assert len(metrics) == 3  # schema + header + the initial row

    def test_byte_identical_reruns(self, tmp_path):
        path = write_case(tmp_path, max_steps=6)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(path), "--out", str(out_a)]) == 0
        assert main(["run", str(path), "--out", str(out_b)]) == 0
        for name in ("trajectory.csv", "metrics.csv", "scenario.resolved.yaml"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_override_changes_sampling(self, tmp_path):
        body = SQUARE.format(preset="centroid", algorithm="line_search",
                             max_steps=2, grad_tol="1.0e-2",
                             outputs=str(tmp_path / "out"))
        body = body.replace(
            "positions: [[0.22, 0.31], [0.71, 0.28], [0.48, 0.74], [0.83, 0.81]]",
            "count: 4\n  seed: 1")
        path = write_case(tmp_path, body=body)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(path), "--out", str(out_a), "--seed", "5"]) == 0
        assert main(["run", str(path), "--out", str(out_b), "--seed", "6"]) == 0
        first_a = (out_a / "trajectory.csv").read_text().splitlines()[2]
        first_b = (out_b / "trajectory.csv").read_text().splitlines()[2]
        assert first_a != first_b
        assert "seed: 5" in (out_a / "scenario.resolved.yaml").read_text()

    def test_unwritable_output_is_runtime_failure(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("a file, not a directory")
        path = write_case(tmp_path)
        assert main(["run", str(path), "--out", str(blocker / "sub")]) == 1


class TestRender:
    def test_initial_frame_without_run(self, tmp_path, capsys):
        path = write_case(tmp_path)
        assert main(["render", str(path)]) == 0
        svg_path = tmp_path / "out" / "frame_initial.svg"
        doc = minidom.parse(str(svg_path))
        ids = {g.getAttribute("id") for g in doc.getElementsByTagName("g")}
        assert {"density", "cells", "balls", "agents"} <= ids
        assert "trails" not in ids

    def test_final_frame_needs_trajectory(self, tmp_path, capsys):
        path = write_case(tmp_path)
        assert main(["render", str(path), "--frame", "final"]) == 2
        assert "trajectory" in capsys.readouterr().err

    def test_final_and_step_frames_after_run(self, tmp_path, capsys):
        path = write_case(tmp_path, max_steps=5)
        assert main(["run", str(path)]) == 0
        assert main(["render", str(path), "--frame", "final"]) == 0
        doc = minidom.parse(str(tmp_path / "out" / "frame_final.svg"))
        ids = {g.getAttribute("id") for g in doc.getElementsByTagName("g")}
        assert "trails" in ids
        assert main(["render", str(path), "--frame", "2"]) == 0
        assert (tmp_path / "out" / "frame_step2.svg").exists()

    def test_bad_frame_markers(self, tmp_path, capsys):
        path = write_case(tmp_path, max_steps=3)
        assert main(["run", str(path)]) == 0
        assert main(["render", str(path), "--frame", "soon"]) == 2
        assert main(["render", str(path), "--frame", "999"]) == 2
