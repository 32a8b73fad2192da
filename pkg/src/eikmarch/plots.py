"""Figure rendering for the CLI report path (file output only)."""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Rectangle


def _draw_world(ax, world):
    for ob in world.obstacles:
        w = ob.hi[0] - ob.lo[0]
        hgt = ob.hi[1] - ob.lo[1]
        face = "0.75" if ob.permeable else "0.35"
        ax.add_patch(Rectangle(ob.lo, w, hgt, facecolor=face,
                               edgecolor="black", linewidth=0.8, zorder=3))


def _draw_fans(ax, fans):
    for fan in fans:
        if np.isfinite(fan.radius):
            ax.add_patch(Circle(fan.center, fan.radius, fill=False,
                                edgecolor="crimson", linewidth=0.9,
                                linestyle="--", zorder=4))
        ax.plot(*fan.center, marker="+", color="crimson", markersize=6,
                zorder=4)


def plot_field(grid, world, u, path, fans=(), sources=(), levels=30):
    """Contour map of the value field with obstacles and fan regions."""
    X, Y = grid.meshgrid()
    masked = np.ma.masked_invalid(u)
    fig, ax = plt.subplots(figsize=(6.0, 6.0 * (grid.ny / grid.nx)))
    cs = ax.contourf(X, Y, masked, levels=levels, cmap="viridis")
    ax.contour(X, Y, masked, levels=levels, colors="white",
               linewidths=0.3, alpha=0.5)
    fig.colorbar(cs, ax=ax, shrink=0.85)
    _draw_world(ax, world)
    _draw_fans(ax, fans)
    for s in sources:
        ax.plot(*s, marker="*", color="orange", markersize=11,
                markeredgecolor="black", zorder=5)
    ax.set_xlim(grid.origin[0], grid.xmax)
    ax.set_ylim(grid.origin[1], grid.ymax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_convergence(reports, path):
    """Log-log error-vs-h curves with a first-order slope guide."""
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    for ax, attr, label in ((axes[0], "linf", "L-infinity error"),
                            (axes[1], "l1", "L1 error")):
        h_all = []
        for name, report in reports.items():
            hs = report.hs
            errs = [getattr(r, attr) for r in report.rows]
            ax.loglog(hs, errs, marker="o", label=name)
            h_all.extend(hs)
        if h_all:
            h0, h1 = max(h_all), min(h_all)
            anchor = min(getattr(r, attr) for rep in reports.values()
                         for r in rep.rows)
            ax.loglog([h0, h1], [anchor * h0 / h1, anchor], color="gray",
                      linestyle=":", label="slope 1")
        ax.set_xlabel("h")
        ax.set_ylabel(label)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trajectory(grid, world, u, trajectory, path, sources=(), fans=()):
    """Value-field contours with the extracted path overlaid."""
    X, Y = grid.meshgrid()
    masked = np.ma.masked_invalid(u)
    fig, ax = plt.subplots(figsize=(6.0, 6.0 * (grid.ny / grid.nx)))
    ax.contour(X, Y, masked, levels=30, cmap="viridis", linewidths=0.6)
    _draw_world(ax, world)
    _draw_fans(ax, fans)
    pts = trajectory.points
    ax.plot(pts[:, 0], pts[:, 1], color="crimson", linewidth=1.6, zorder=5)
    ax.plot(pts[0, 0], pts[0, 1], marker="o", color="crimson", zorder=5)
    for s in sources:
        ax.plot(*s, marker="*", color="orange", markersize=11,
                markeredgecolor="black", zorder=5)
    ax.set_xlim(grid.origin[0], grid.xmax)
    ax.set_ylim(grid.origin[1], grid.ymax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
