"""Matplotlib rendering of disk portraits.

Every plotted coordinate is the (y1, y2) projection of a point on the
closed upper hemisphere, so the drawing lives inside the unit circle.
Output is configured for reproducibility: fixed hash salt, no date
metadata, vector primitives only.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_portrait"]

_STYLE = {
    "svg.hashsalt": "wavedisk",
    "svg.fonttype": "none",
    "font.size": 9,
}


def render_portrait(doc: dict, path: str) -> None:
    """Draw a PortraitDocument (its to_json dict form) to an SVG file."""
    with matplotlib.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 6.0))
        ax.set_aspect("equal")
        ax.set_xlim(-1.08, 1.08)
        ax.set_ylim(-1.08, 1.08)
        ax.axis("off")

        outline = doc["disk_outline"]
        ax.plot([p[0] for p in outline], [p[1] for p in outline],
                color="black", linewidth=1.0)
        ax.plot([-1, 1], [0, 0], color="0.85", linewidth=0.6, zorder=0)
        ax.plot([0, 0], [-1, 1], color="0.85", linewidth=0.6, zorder=0)

        for traj in doc["trajectories"]:
            pts = traj["points"]
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    color=traj.get("color", "tab:blue"), linewidth=0.7, alpha=0.85)

        for eq in doc["boundary_equilibria"]:
            y = eq["disk"]
            ax.plot([y[0]], [y[1]], marker="o", markersize=5, color="crimson")
            if eq.get("label"):
                ax.annotate(eq["label"], (y[0], y[1]),
                            xytext=(1.06 * y[0], 1.06 * y[1]),
                            ha="center", va="center", fontsize=8)
        for eq in doc["finite_equilibria"]:
            y = eq["disk"]
            ax.plot([y[0]], [y[1]], marker="s", markersize=4, color="black")
            if eq.get("label"):
                ax.annotate(eq["label"], (y[0], y[1]), xytext=(y[0] + 0.05, y[1] + 0.04),
                            fontsize=8)

        ax.set_title(f"s = {doc['s']:g}, c = {doc['c']:g}  ({doc['regime']})", fontsize=10)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
