"""Figure rendering: iterate/anchor scatters and log-log decay curves."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # fixed backend keeps output bytes reproducible

import matplotlib.pyplot as plt
import numpy as np

from .io import InputError, read_coords, read_decay

DPI = 150

plt.rcParams["svg.hashsalt"] = "anchoreg-plots"

KINDS = ("trajectory_scatter", "loglog_decay")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: list[tuple[str, str]]  # (csv path, label)
    output: str
    reference_slope: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown plot kind {self.kind!r} (choose from {KINDS})")
        if not self.inputs:
            raise InputError("at least one input CSV is required")
        labels = [label for _, label in self.inputs]
        if len(set(labels)) != len(labels):
            raise InputError(f"labels must be unique, got {labels}")


def _save(fig, output: str) -> Path:
    path = Path(output)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if path.suffix.lower() == ".svg" else None
    fig.savefig(path, dpi=DPI, metadata=metadata)
    plt.close(fig)
    return path


def plot_trajectory(spec: PlotSpec) -> Path:
    """Scatter iterates (red) and anchors (green), one panel per input."""
    panels = len(spec.inputs)
    fig, axes = plt.subplots(1, panels, figsize=(5.0 * panels, 4.5), squeeze=False)
    for ax, (csv_path, label) in zip(axes[0], spec.inputs):
        x, y, xbar, ybar = read_coords(csv_path)
        ax.scatter(x, y, s=6, color="tab:red", label="iterates")
        ax.scatter(xbar, ybar, s=6, color="tab:green", label="anchors")
        ax.scatter([0.0], [0.0], marker="+", s=90, color="black", label="saddle")
        ax.set_title(label)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.grid(True, linestyle="--", alpha=0.3)
        ax.legend()
    fig.tight_layout()
    return _save(fig, spec.output)


def plot_loglog(spec: PlotSpec) -> Path:
    """One gradient-decay curve per input on log-log axes."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    tiny = float(np.finfo(float).tiny)
    first_curve = None
    for csv_path, label in spec.inputs:
        ks, gs = read_decay(csv_path)
        pts = [(k, g) for k, g in zip(ks, gs) if k >= 1]
        k_arr = np.array([p[0] for p in pts])
        g_arr = np.array([p[1] for p in pts])
        if np.any(g_arr <= 0.0):
            warnings.warn(f"{csv_path}: clipped nonpositive gradient values at {tiny:g}")
            g_arr = np.maximum(g_arr, tiny)
        ax.loglog(k_arr, g_arr, label=label, linewidth=1.3)
        if first_curve is None and k_arr.size:
            first_curve = (k_arr, g_arr)
    if spec.reference_slope is not None and first_curve is not None:
        k_arr, g_arr = first_curve
        anchor_k, anchor_g = float(k_arr[0]), float(g_arr[0])
        guide = anchor_g * (k_arr / anchor_k) ** spec.reference_slope
        ax.loglog(
            k_arr, guide, linestyle="--", color="gray", linewidth=1.0,
            label=f"slope {spec.reference_slope:g}",
        )
    ax.set_xlabel("iteration k")
    ax.set_ylabel("squared gradient norm")
    ax.grid(True, which="both", linestyle="--", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, spec.output)


def render(spec: PlotSpec) -> Path:
    if spec.kind == "trajectory_scatter":
        return plot_trajectory(spec)
    return plot_loglog(spec)
