"""Figure rendering from the simulation run directory contract.

A run directory contains trajectory.csv (t plus node_0..node_N columns),
functionals.csv (t,E_u,F,W,V,Gamma,sup_dev,y,U,eta) and report.json. This
module only reads those files; it never imports the solver.
"""
from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap", "boundary_traces", "control_trace", "functionals")

FUNCTIONAL_COLUMNS = ["t", "E_u", "F", "W", "V", "Gamma", "sup_dev", "y", "U", "eta"]

MAX_HEATMAP_COLUMNS = 2000


class VizError(ValueError):
    """Structured rendering error: missing/empty/malformed inputs."""


@dataclass
class PlotSpec:
    in_dir: str
    kind: str
    out_path: str
    xlabel: str = "Time t"
    ylabel: str | None = None  # kind-specific default when None
    max_columns: int = MAX_HEATMAP_COLUMNS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise VizError(f"unknown plot kind {self.kind!r} (expected one of {', '.join(KINDS)})")
        if self.max_columns < 2:
            raise VizError("max_columns must be at least 2")

    @property
    def trajectory_path(self) -> str:
        return os.path.join(self.in_dir, "trajectory.csv")

    @property
    def functionals_path(self) -> str:
        return os.path.join(self.in_dir, "functionals.csv")

    @property
    def report_path(self) -> str:
        return os.path.join(self.in_dir, "report.json")


@dataclass
class RenderInfo:
    """What was drawn, for callers that want to check without reparsing the image."""
    out_path: str
    kind: str
    xlabel: str
    ylabel: str
    n_points: int
    annotations: dict = field(default_factory=dict)


def _read_csv(path: str, expect_prefix: list | None = None):
    if not os.path.exists(path):
        raise VizError(f"missing input file: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
    if not header:
        raise VizError(f"{path}: empty file")
    columns = header.split(",")
    if expect_prefix is not None and columns[:len(expect_prefix)] != expect_prefix:
        raise VizError(f"{path}: expected columns {','.join(expect_prefix)}..., got {header}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # loadtxt warns on a header-only file
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise VizError(f"{path}: no data rows")
    if data.shape[1] != len(columns):
        raise VizError(f"{path}: rows have {data.shape[1]} fields, header has {len(columns)}")
    return columns, data


def _read_trajectory(spec: PlotSpec):
    columns, data = _read_csv(spec.trajectory_path, ["t", "node_0"])
    node_cols = columns[1:]
    if any(c != f"node_{i}" for i, c in enumerate(node_cols)):
        raise VizError(f"{spec.trajectory_path}: node columns must be node_0..node_N in order")
    return data[:, 0], data[:, 1:]


def _read_functionals(spec: PlotSpec):
    _, data = _read_csv(spec.functionals_path, FUNCTIONAL_COLUMNS)
    return {name: data[:, i] for i, name in enumerate(FUNCTIONAL_COLUMNS)}


def _read_report(spec: PlotSpec) -> dict:
    if not os.path.exists(spec.report_path):
        return {}
    with open(spec.report_path) as fh:
        return json.load(fh)


def _decimate(times: np.ndarray, values: np.ndarray, max_columns: int):
    if times.size <= max_columns:
        return times, values
    idx = np.unique(np.linspace(0, times.size - 1, max_columns).round().astype(int))
    return times[idx], values[idx]


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=110)
    return fig, ax


def render(spec: PlotSpec) -> RenderInfo:
    """Render one figure to spec.out_path and return what was drawn."""
    if spec.kind == "heatmap":
        info = _render_heatmap(spec)
    elif spec.kind == "boundary_traces":
        info = _render_boundary_traces(spec)
    elif spec.kind == "control_trace":
        info = _render_control_trace(spec)
    else:
        info = _render_functionals(spec)
    return info


def _finish(fig, ax, spec: PlotSpec, ylabel: str, n_points: int, annotations=None) -> RenderInfo:
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(ylabel)
    out_dir = os.path.dirname(os.path.abspath(spec.out_path))
    os.makedirs(out_dir, exist_ok=True)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return RenderInfo(out_path=spec.out_path, kind=spec.kind, xlabel=spec.xlabel,
                      ylabel=ylabel, n_points=n_points, annotations=annotations or {})


def _render_heatmap(spec: PlotSpec) -> RenderInfo:
    times, nodes = _read_trajectory(spec)
    times, nodes = _decimate(times, nodes, spec.max_columns)
    x = np.linspace(0.0, 1.0, nodes.shape[1])
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(times, x, nodes.T, shading="nearest", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax, label="velocity")
    return _finish(fig, ax, spec, spec.ylabel or "Space x", times.size,
                   {"columns": int(times.size)})


def _render_boundary_traces(spec: PlotSpec) -> RenderInfo:
    times, nodes = _read_trajectory(spec)
    report = _read_report(spec)
    fig, ax = _new_axes()
    ax.plot(times, nodes[:, 0], label="x = 0", lw=0.8)
    ax.plot(times, nodes[:, -1], label="x = 1", lw=0.8)
    annotations = {}
    y_ref = report.get("config", {}).get("v1_ref")
    if y_ref is not None:
        ax.axhline(y_ref, color="k", ls="--", lw=0.8, label="reference")
        annotations["y_ref"] = y_ref
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, ax, spec, spec.ylabel or "boundary velocity", times.size, annotations)


def _render_control_trace(spec: PlotSpec) -> RenderInfo:
    cols = _read_functionals(spec)
    fig, ax = _new_axes()
    ax.plot(cols["t"], cols["U"], lw=0.8)
    return _finish(fig, ax, spec, spec.ylabel or "control U", cols["t"].size)


def _render_functionals(spec: PlotSpec) -> RenderInfo:
    cols = _read_functionals(spec)
    report = _read_report(spec)
    t, g = cols["t"], cols["Gamma"]
    fig, ax = _new_axes()
    pos = g > 0.0
    if not np.any(pos):
        raise VizError(f"{spec.functionals_path}: Gamma has no positive samples to log-plot")
    ax.semilogy(t[pos], g[pos], lw=0.8, label="Gamma")
    annotations = {}
    fit = report.get("decay_fit") or {}
    if "rho" in fit:
        # the annotated rate is the report's fit verbatim, not a refit
        rho, m = fit["rho"], fit.get("M", 1.0)
        g0 = g[pos][0]
        ax.semilogy(t, m * g0 * np.exp(-rho * (t - t[0])), "k--", lw=0.8,
                    label=f"envelope fit, rho = {rho:.6g}")
        annotations["rho"] = rho
        annotations["M"] = m
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, ax, spec, spec.ylabel or "Gamma (log scale)", int(np.count_nonzero(pos)),
                   annotations)
