"""Render figures from the simulator's exported CSV bundles.

The simulator CLI (``tumor-immune simulate`` / ``tumor-immune figures``)
writes plot-ready CSVs; this module turns them into images without
recomputing anything.  Figure kinds and their expected schemas:

    timeseries       one or more path CSVs ``t,x,y[,psi][,phi][,z]``;
                     draws x(t) and y(t) for each input (a two-input call
                     gives the stochastic-vs-deterministic comparison)
    phase            ``x,y`` pairs; one trajectory in the phase plane
    density-overlay  two ``grid,density`` CSVs (empirical KDE first,
                     analytic law second) superposed on shared axes
    joint-density    ``x,y,density`` on a rectangular grid; heat map

A figure spec is a JSON object::

    {"kind": "timeseries", "inputs": ["out/path.csv"],
     "output": "figs/series.png",
     "labels": {"title": "...", "x": "...", "y": "...", "legend": ["..."]}}

Schema violations name the missing column; an empty CSV is a clean error
and never produces a partial output file.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "RenderError", "load_columns", "build_figure", "render", "main"]

KINDS = ("timeseries", "phase", "density-overlay", "joint-density")


class RenderError(ValueError):
    """Bad figure spec or input CSV."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise RenderError("spec needs at least one input CSV")

    @classmethod
    def from_dict(cls, doc: dict) -> "FigureSpec":
        for key in ("kind", "inputs", "output"):
            if key not in doc:
                raise RenderError(f"figure spec is missing {key!r}")
        return cls(
            kind=doc["kind"],
            inputs=tuple(doc["inputs"]),
            output=doc["output"],
            labels=doc.get("labels", {}),
        )

    @classmethod
    def load(cls, path) -> "FigureSpec":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise RenderError(f"cannot read spec: {exc}") from None
        except json.JSONDecodeError as exc:
            raise RenderError(f"spec is not valid JSON: {exc}") from None


def load_columns(path, required: tuple) -> dict:
    """Read a header-line CSV into named columns, checking the schema."""
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if not header:
                raise RenderError(f"{path}: empty CSV (no header)")
            names = header.split(",")
            body = fh.read()
        if not body.strip():
            raise RenderError(f"{path}: no data rows")
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise RenderError(f"{path}: malformed CSV ({exc})") from None
    for col in required:
        if col not in names:
            raise RenderError(f"{path}: missing column {col!r} (found {names})")
    if data.size == 0:
        raise RenderError(f"{path}: no data rows")
    return {name: data[:, i] for i, name in enumerate(names)}


def _legend_label(spec: FigureSpec, index: int, default: str) -> str:
    legend = spec.labels.get("legend", [])
    return legend[index] if index < len(legend) else default


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure; returns (figure, number of series)."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    n_series = 0

    if spec.kind == "timeseries":
        for i, path in enumerate(spec.inputs):
            cols = load_columns(path, required=("t", "x", "y"))
            suffix = "" if len(spec.inputs) == 1 else f" [{_legend_label(spec, i, Path(path).stem)}]"
            ax.plot(cols["t"], cols["x"], color="tab:red", lw=1.0,
                    ls=["-", "--", ":"][i % 3], label=f"effector x{suffix}")
            ax.plot(cols["t"], cols["y"], color="tab:blue", lw=1.0,
                    ls=["-", "--", ":"][i % 3], label=f"tumor y{suffix}")
            n_series += 2
        ax.set_xlabel(spec.labels.get("x", "t"))
        ax.set_ylabel(spec.labels.get("y", "density"))
    elif spec.kind == "phase":
        cols = load_columns(spec.inputs[0], required=("x", "y"))
        ax.plot(cols["x"], cols["y"], lw=0.7, color="tab:purple",
                label=_legend_label(spec, 0, "trajectory"))
        n_series = 1
        ax.set_xlabel(spec.labels.get("x", "effector x"))
        ax.set_ylabel(spec.labels.get("y", "tumor y"))
    elif spec.kind == "density-overlay":
        if len(spec.inputs) != 2:
            raise RenderError("density-overlay needs exactly two inputs (empirical, analytic)")
        empirical = load_columns(spec.inputs[0], required=("grid", "density"))
        analytic = load_columns(spec.inputs[1], required=("grid", "density"))
        ax.plot(empirical["grid"], empirical["density"], color="tab:blue", lw=1.4,
                label=_legend_label(spec, 0, "empirical density"))
        ax.plot(analytic["grid"], analytic["density"], color="tab:red", lw=1.4,
                label=_legend_label(spec, 1, "analytic density"))
        n_series = 2
        ax.set_xlabel(spec.labels.get("x", "x"))
        ax.set_ylabel(spec.labels.get("y", "density"))
    else:  # joint-density
        cols = load_columns(spec.inputs[0], required=("x", "y", "density"))
        xs = np.unique(cols["x"])
        ys = np.unique(cols["y"])
        if xs.size * ys.size != cols["density"].size:
            raise RenderError(f"{spec.inputs[0]}: x,y values do not form a rectangular grid")
        grid = cols["density"].reshape(xs.size, ys.size)
        mesh = ax.pcolormesh(xs, ys, grid.T, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="density")
        n_series = 1
        ax.set_xlabel(spec.labels.get("x", "effector x"))
        ax.set_ylabel(spec.labels.get("y", "tumor y"))

    if spec.kind != "joint-density":
        ax.legend(loc="best", fontsize=9)
    ax.set_title(spec.labels.get("title", ""))
    fig.tight_layout()
    return fig, n_series


def render(spec: FigureSpec) -> Path:
    """Write the figure image; the file appears only after a clean build."""
    fig, _ = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=130)
    finally:
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render a figure from exported CSV bundles."
    )
    parser.add_argument("--spec", required=True, help="JSON figure spec")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec.load(args.spec))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
