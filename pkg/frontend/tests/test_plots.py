"""Rendering tests against run directories produced by the solver CLI.

The solver is exercised only through its command line and file contract;
downsized presets keep the data generation fast.
"""
import json
import subprocess
import sys

import numpy as np
import pytest

from waveviz import PlotSpec, VizError, render
from waveviz.cli import main as viz_main

PRESETS = ["1a", "1b", "1c", "2a", "2b", "2c", "3a", "3b", "3c"]


def generate_run(preset: str, out_dir):
    cfg = {"preset": preset, "N": 16, "T": 2.0, "dt": 5e-4, "sample_stride": 5}
    cfg_path = out_dir / f"{preset}.json"
    cfg_path.write_text(json.dumps(cfg))
    run_dir = out_dir / preset
    proc = subprocess.run(
        [sys.executable, "-m", "dynwave.cli", "run", str(cfg_path), "--out", str(run_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return run_dir


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    return {name: generate_run(name, base) for name in PRESETS}


class TestRenderAllPresets:
    @pytest.mark.parametrize("kind", ["heatmap", "boundary_traces", "control_trace", "functionals"])
    def test_every_preset_renders(self, runs, tmp_path, kind):
        for name, run_dir in runs.items():
            out = tmp_path / f"{name}_{kind}.png"
            info = render(PlotSpec(in_dir=str(run_dir), kind=kind, out_path=str(out)))
            assert out.exists() and out.stat().st_size > 0
            assert info.kind == kind


class TestHeatmap:
    def test_default_axis_labels(self, runs, tmp_path):
        out = tmp_path / "h.png"
        info = render(PlotSpec(in_dir=str(runs["1a"]), kind="heatmap", out_path=str(out)))
        assert info.xlabel == "Time t"
        assert info.ylabel == "Space x"

    def test_time_decimation_cap(self, runs, tmp_path):
        out = tmp_path / "h.png"
        spec = PlotSpec(in_dir=str(runs["1a"]), kind="heatmap", out_path=str(out),
                        max_columns=20)
        info = render(spec)
        assert info.annotations["columns"] <= 20

    def test_idempotent_bytes(self, runs, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render(PlotSpec(in_dir=str(runs["2b"]), kind="heatmap", out_path=str(a)))
        render(PlotSpec(in_dir=str(runs["2b"]), kind="heatmap", out_path=str(b)))
        assert a.read_bytes() == b.read_bytes()


class TestBoundaryTraces:
    def test_reference_line_from_report(self, runs, tmp_path):
        out = tmp_path / "b.png"
        info = render(PlotSpec(in_dir=str(runs["3b"]), kind="boundary_traces", out_path=str(out)))
        assert info.annotations["y_ref"] == 0.5


class TestFunctionals:
    def test_annotated_rate_matches_report_exactly(self, runs, tmp_path):
        report = json.loads((runs["3b"] / "report.json").read_text())
        out = tmp_path / "f.png"
        info = render(PlotSpec(in_dir=str(runs["3b"]), kind="functionals", out_path=str(out)))
        assert info.annotations["rho"] == report["decay_fit"]["rho"]
        assert info.annotations["M"] == report["decay_fit"]["M"]

    def test_renders_without_fit_when_report_has_none(self, runs, tmp_path):
        # undamped presets carry no decay fit; the curve still plots
        out = tmp_path / "f.png"
        info = render(PlotSpec(in_dir=str(runs["1a"]), kind="functionals", out_path=str(out)))
        assert "rho" not in info.annotations
        assert out.stat().st_size > 0


class TestErrors:
    def test_unknown_kind(self, tmp_path):
        with pytest.raises(VizError):
            PlotSpec(in_dir=str(tmp_path), kind="scatter", out_path="x.png")

    def test_missing_directory(self, tmp_path):
        spec = PlotSpec(in_dir=str(tmp_path / "nope"), kind="heatmap",
                        out_path=str(tmp_path / "x.png"))
        with pytest.raises(VizError, match="missing input file"):
            render(spec)

    def test_empty_csv(self, tmp_path):
        (tmp_path / "trajectory.csv").write_text("")
        spec = PlotSpec(in_dir=str(tmp_path), kind="heatmap",
                        out_path=str(tmp_path / "x.png"))
        with pytest.raises(VizError, match="empty"):
            render(spec)

    def test_header_without_rows(self, tmp_path):
        (tmp_path / "trajectory.csv").write_text("t,node_0,node_1\n")
        spec = PlotSpec(in_dir=str(tmp_path), kind="heatmap",
                        out_path=str(tmp_path / "x.png"))
        with pytest.raises(VizError, match="no data rows"):
            render(spec)

    def test_wrong_columns(self, tmp_path):
        (tmp_path / "functionals.csv").write_text("t,energy\n0,1\n")
        spec = PlotSpec(in_dir=str(tmp_path), kind="control_trace",
                        out_path=str(tmp_path / "x.png"))
        with pytest.raises(VizError, match="expected columns"):
            render(spec)


class TestCli:
    def test_plot_ok(self, runs, tmp_path, capsys):
        out = tmp_path / "cli.png"
        code = viz_main(["plot", "--kind", "heatmap", "--in", str(runs["1a"]),
                         "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert "wrote" in capsys.readouterr().out

    def test_plot_bad_input_exit_code(self, tmp_path, capsys):
        (tmp_path / "trajectory.csv").write_text("")
        code = viz_main(["plot", "--kind", "heatmap", "--in", str(tmp_path),
                         "--out", str(tmp_path / "x.png")])
        assert code == 2
        assert "error:" in capsys.readouterr().err
