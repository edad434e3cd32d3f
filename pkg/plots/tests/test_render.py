"""Renderer tests: schema handling plus the end-to-end bundle smoke test."""

import json
import subprocess
import sys

import numpy as np
import pytest

from tumor_immune_plots import FigureSpec, RenderError, build_figure, render


def write_csv(path, header, rows):
    lines = [header] + [",".join(f"{float(v)!r}" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture()
def path_csv(tmp_path):
    rows = [(0.1 * i, 5.0 + i, 50.0 - i) for i in range(40)]
    return write_csv(tmp_path / "path.csv", "t,x,y", rows)


@pytest.fixture()
def density_pair(tmp_path):
    grid = np.linspace(0.05, 1.0, 50)
    emp = write_csv(tmp_path / "emp.csv", "grid,density", list(zip(grid, np.exp(-grid))))
    ana = write_csv(tmp_path / "ana.csv", "grid,density", list(zip(grid, np.exp(-2 * grid))))
    return emp, ana


class TestSpecs:
    def test_unknown_kind(self):
        with pytest.raises(RenderError, match="kind"):
            FigureSpec(kind="pie", inputs=("a.csv",), output="x.png")

    def test_missing_fields(self):
        with pytest.raises(RenderError, match="output"):
            FigureSpec.from_dict({"kind": "phase", "inputs": ["a.csv"]})


class TestBuild:
    def test_timeseries_series_count(self, path_csv, tmp_path):
        spec = FigureSpec("timeseries", (path_csv,), str(tmp_path / "f.png"))
        fig, n = build_figure(spec)
        assert n == 2 and len(fig.axes[0].lines) == 2

    def test_timeseries_comparison_two_inputs(self, path_csv, tmp_path):
        spec = FigureSpec(
            "timeseries", (path_csv, path_csv), str(tmp_path / "f.png"),
            labels={"legend": ["stochastic", "deterministic"]},
        )
        fig, n = build_figure(spec)
        assert n == 4 and len(fig.axes[0].lines) == 4

    def test_phase_series_count(self, tmp_path):
        phase = write_csv(tmp_path / "phase.csv", "x,y", [(1.0, 2.0), (1.5, 2.5), (2.0, 1.0)])
        fig, n = build_figure(FigureSpec("phase", (phase,), str(tmp_path / "f.png")))
        assert n == 1 and len(fig.axes[0].lines) == 1

    def test_density_overlay_superposes_both_curves(self, density_pair, tmp_path):
        spec = FigureSpec("density-overlay", density_pair, str(tmp_path / "f.png"))
        fig, n = build_figure(spec)
        ax = fig.axes[0]
        assert n == 2 and len(ax.lines) == 2
        # same axes, both curves populated
        for line in ax.lines:
            assert line.get_xydata().shape[0] == 50

    def test_joint_density_grid(self, tmp_path):
        xs, ys = np.linspace(0, 1, 4), np.linspace(0, 2, 5)
        rows = [(x, y, x + y) for x in xs for y in ys]
        joint = write_csv(tmp_path / "joint.csv", "x,y,density", rows)
        fig, n = build_figure(FigureSpec("joint-density", (joint,), str(tmp_path / "f.png")))
        assert n == 1

    def test_missing_column_named(self, tmp_path):
        bad = write_csv(tmp_path / "bad.csv", "t,x", [(0.0, 1.0), (0.1, 1.1)])
        spec = FigureSpec("timeseries", (bad,), str(tmp_path / "f.png"))
        with pytest.raises(RenderError, match="'y'"):
            build_figure(spec)

    def test_empty_csv_clean_error_no_partial_file(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        out = tmp_path / "f.png"
        with pytest.raises(RenderError, match="empty"):
            render(FigureSpec("timeseries", (str(empty),), str(out)))
        assert not out.exists()

    def test_header_only_csv_rejected(self, tmp_path):
        header_only = write_csv(tmp_path / "h.csv", "t,x,y", [])
        out = tmp_path / "f.png"
        with pytest.raises(RenderError, match="no data rows"):
            render(FigureSpec("timeseries", (header_only,), str(out)))
        assert not out.exists()


class TestRenderOutput:
    def test_writes_nonzero_image(self, path_csv, tmp_path):
        out = render(FigureSpec("timeseries", (path_csv,), str(tmp_path / "fig" / "a.png")))
        assert out.exists() and out.stat().st_size > 0

    def test_cli_entry(self, path_csv, tmp_path):
        from tumor_immune_plots.render import main

        spec_doc = {
            "kind": "timeseries",
            "inputs": [path_csv],
            "output": str(tmp_path / "cli.png"),
            "labels": {"title": "one path"},
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec_doc))
        assert main(["--spec", str(spec_path)]) == 0
        assert (tmp_path / "cli.png").stat().st_size > 0
        assert main(["--spec", str(tmp_path / "missing.json")]) == 2


def simulator(args, cwd):
    cmd = [sys.executable, "-m", "tumor_immune_sde.cli", *args]
    proc = subprocess.run(cmd, cwd=cwd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


class TestEndToEndBundles:
    """The five figure-equivalents, from real CLI exports, without recomputation."""

    @pytest.fixture(scope="class")
    def bundles(self, tmp_path_factory):
        root = tmp_path_factory.mktemp("bundles")

        def cfg(doc, name):
            path = root / name
            path.write_text(json.dumps(doc))
            return str(path)

        stoch_51 = cfg(
            {"preset": "example-5.1", "ensemble": {"horizon": 25.0, "master_seed": 8}},
            "c1.json",
        )
        det_51 = cfg(
            {
                "preset": "example-5.1",
                "params": {"sigma1": 0.0, "sigma2": 0.0},
                "ensemble": {"horizon": 25.0, "master_seed": 8},
            },
            "c2.json",
        )
        dens_51 = cfg(
            {"preset": "example-5.1", "ensemble": {"n_paths": 60, "horizon": 30.0, "master_seed": 8}},
            "c3.json",
        )
        series_52 = cfg(
            {"preset": "example-5.2", "ensemble": {"horizon": 25.0, "master_seed": 8}},
            "c4.json",
        )
        joint_52 = cfg(
            {"preset": "example-5.2", "ensemble": {"n_paths": 60, "horizon": 20.0, "master_seed": 8}},
            "c5.json",
        )
        simulator(["figures", "--which", "paths", "--config", stoch_51, "--out", str(root / "s51")], root)
        simulator(["figures", "--which", "paths", "--config", det_51, "--out", str(root / "d51")], root)
        simulator(["figures", "--which", "density", "--config", dens_51, "--out", str(root / "dens51")], root)
        simulator(["figures", "--which", "phase", "--config", series_52, "--out", str(root / "ph52")], root)
        simulator(["figures", "--which", "joint-density", "--config", joint_52, "--out", str(root / "j52")], root)
        return root

    def test_five_figure_equivalents(self, bundles):
        root = bundles
        figs = root / "figs"
        cases = [
            ("timeseries", (root / "s51" / "paths_000.csv",), "series_51.png", 2),
            (
                "timeseries",
                (root / "s51" / "paths_000.csv", root / "d51" / "paths_000.csv"),
                "comparison_51.png",
                4,
            ),
            (
                "density-overlay",
                (
                    root / "dens51" / "density_x_empirical.csv",
                    root / "dens51" / "density_x_analytic.csv",
                ),
                "density_51.png",
                2,
            ),
            ("phase", (root / "ph52" / "phase.csv",), "phase_52.png", 1),
            ("joint-density", (root / "j52" / "joint_density.csv",), "joint_52.png", 1),
        ]
        for kind, inputs, name, expected_series in cases:
            spec = FigureSpec(kind, tuple(str(p) for p in inputs), str(figs / name))
            _, n = build_figure(spec)
            assert n == expected_series, f"{name}: expected {expected_series} series, got {n}"
            out = render(spec)
            assert out.exists() and out.stat().st_size > 0, name
