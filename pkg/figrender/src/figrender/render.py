"""Figure builders. Read-only: no numeric work beyond plotting transforms."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import io

DEFAULT_DPI = 150
CHAIN_COLORS = {"x": "#1f77b4", "y": "#d62728"}


@dataclass(frozen=True)
class RenderSpec:
    """What to render and where to put it."""

    kind: str  # bifurcation | ccm | trajectory
    input_path: str
    output_path: str
    events_path: str | None = None
    x_min: float | None = None
    x_max: float | None = None
    y_min: float | None = None
    y_max: float | None = None
    point_size: float = 0.25
    dpi: int = DEFAULT_DPI


def _apply_ranges(ax, spec: RenderSpec) -> None:
    if spec.x_min is not None or spec.x_max is not None:
        ax.set_xlim(left=spec.x_min, right=spec.x_max)
    if spec.y_min is not None or spec.y_max is not None:
        ax.set_ylim(bottom=spec.y_min, top=spec.y_max)


def render_bifurcation(spec: RenderSpec):
    """Scatter of attractor values against r, one point per CSV row.

    Returns (figure, stats) where stats counts the plotted points per
    chain; saving is the caller's job (see save()).
    """
    cells = io.read_bifurcation(spec.input_path)
    fig, ax = plt.subplots(figsize=(8, 5))
    stats = {}
    for chain in ("x", "y"):
        rs, values = cells[chain]
        ax.scatter(rs, values, s=spec.point_size, color=CHAIN_COLORS[chain],
                   marker=".", linewidths=0, label=f"chain {chain}")
        stats[f"points_{chain}"] = len(values)
    ax.set_xlabel("r")
    ax.set_ylabel("feature value")
    ax.legend(loc="upper left", markerscale=20)
    _apply_ranges(ax, spec)
    return fig, stats


def render_ccm(spec: RenderSpec):
    """Cross-map skill against library size, one curve per direction."""
    cc = io.read_ccm_report(spec.input_path)
    fig, ax = plt.subplots(figsize=(7, 5))
    sizes = cc["library_sizes"]
    labels = {"y_to_x": "estimate y from x manifold",
              "x_to_y": "estimate x from y manifold"}
    stats = {}
    for direction, label in labels.items():
        skill = cc[direction]["skill"]
        ax.plot(sizes, skill, marker="o", label=label)
        stats[f"points_{direction}"] = len(skill)
    ax.set_xlabel("library size")
    ax.set_ylabel("cross-map skill")
    ax.set_ylim(-1.05, 1.05)
    ax.axhline(0.0, color="gray", linewidth=0.5)
    ax.legend(loc="lower right")
    _apply_ranges(ax, spec)
    return fig, stats


def render_trajectory(spec: RenderSpec):
    """Both chains against the iteration index, events overlaid if given."""
    ns, xs, ys = io.read_trajectory(spec.input_path)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(ns, xs, color=CHAIN_COLORS["x"], linewidth=0.7,
            marker=".", markersize=1.5, label="chain x")
    ax.plot(ns, ys, color=CHAIN_COLORS["y"], linewidth=0.7,
            marker=".", markersize=1.5, label="chain y")
    stats = {"points_x": len(xs), "points_y": len(ys), "events": 0}
    if spec.events_path is not None:
        events = io.read_events(spec.events_path)
        for it, target, _ in events:
            ax.axvline(it, color="black", alpha=0.25, linewidth=0.6)
        stats["events"] = len(events)
    ax.set_xlabel("n")
    ax.set_ylabel("feature value")
    ax.legend(loc="upper right")
    _apply_ranges(ax, spec)
    return fig, stats


RENDERERS = {
    "bifurcation": render_bifurcation,
    "ccm": render_ccm,
    "trajectory": render_trajectory,
}


def render(spec: RenderSpec):
    if spec.kind not in RENDERERS:
        raise io.SchemaMismatchError(f"unknown figure kind {spec.kind!r}")
    return RENDERERS[spec.kind](spec)


def save(fig, spec: RenderSpec) -> None:
    # output format follows the file extension; .png stays the default
    fig.savefig(spec.output_path, dpi=spec.dpi)
    plt.close(fig)
