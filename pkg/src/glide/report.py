"""Figure rendering for trial and comparison reports.

Renders headless matplotlib PNGs next to the JSON-lines trial output: a
top-down trajectory view (reference path, trail, waypoints with arrival
discs) and a per-technique comparison chart (completion time and cross-track
error, mean with SD bars).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .paths import Scenario  # noqa: E402

_TRAIL_COLORS = {"gip": "tab:blue", "wip": "tab:orange"}


def plot_trajectory(
    scenario: Scenario,
    trails: dict[str, Sequence[tuple[int, float, float, float]]],
    out_path: str | Path,
    title: str | None = None,
) -> Path:
    """Draw the reference path and one or more pose trails; returns the file."""
    fig, ax = plt.subplots(figsize=(7, 7))
    pts = scenario.ref_path().points
    ax.plot(pts[:, 0], pts[:, 1], "--", color="0.6", lw=1.2, label="reference")
    for wx, wy in scenario.waypoints:
        ax.add_patch(
            plt.Circle((wx, wy), scenario.arrival_radius, fill=False,
                       color="0.75", lw=0.8)
        )
    for name, trail in trails.items():
        if not trail:
            continue
        xs = [p[1] for p in trail]
        ys = [p[2] for p in trail]
        ax.plot(xs, ys, color=_TRAIL_COLORS.get(name, "tab:green"),
                lw=1.4, label=name)
    ax.plot(scenario.start.x, scenario.start.y, "k^", ms=8, label="start")
    gx, gy = scenario.goal
    ax.plot(gx, gy, "k*", ms=12, label="goal")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    if title:
        ax.set_title(title)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_comparison(table: dict, out_path: str | Path) -> Path:
    """Bar chart of per-technique completion time and mean XTE (mean, SD)."""
    techniques = list(table["techniques"])
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, metric, label in zip(
        axes, ("completion_s", "mean_xte_m"),
        ("completion time [s]", "mean cross-track error [m]"),
    ):
        means = [table["techniques"][t][metric]["mean"] for t in techniques]
        sds = [table["techniques"][t][metric]["sd"] for t in techniques]
        colors = [_TRAIL_COLORS.get(t, "tab:green") for t in techniques]
        ax.bar(techniques, means, yerr=sds, capsize=4, color=colors, alpha=0.85)
        ax.set_ylabel(label)
        ax.grid(True, axis="y", alpha=0.3)
    fig.suptitle(f"{table['task']} task, {table['reps']} matched reps")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path
