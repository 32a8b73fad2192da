"""Delimited-text and PGM output, byte-identical across runs."""

from __future__ import annotations

import math

import numpy as np


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return format(float(v), ".17g")


def _open_out(path, mode):
    try:
        if "b" in mode:
            return open(path, mode)
        return open(path, mode, encoding="utf-8", newline="\n")
    except OSError as e:
        raise RuntimeError(f"cannot write {path}: {e}") from e


def emit_field_csv(grid, u, path) -> None:
    """One row per node in linear-index order, +inf written as "inf"."""
    with _open_out(path, "w") as fh:
        fh.write("i,j,x,y,u\n")
        for i in range(grid.nx):
            for j in range(grid.ny):
                x, y = grid.node_xy(i, j)
                fh.write(f"{i},{j},{_fmt(x)},{_fmt(y)},{_fmt(u[i, j])}\n")


def emit_heatmap_pgm(u, path) -> None:
    """8-bit binary PGM, gray levels normalized over the finite values;
    infinite (excluded or unreached) nodes render black."""
    u = np.asarray(u, dtype=float)
    finite = np.isfinite(u)
    if not finite.any():
        raise ValueError("field has no finite values to normalize")
    lo = u[finite].min()
    hi = u[finite].max()
    span = hi - lo if hi > lo else 1.0
    gray = np.zeros(u.shape, dtype=np.uint8)
    gray[finite] = np.round(255.0 * (u[finite] - lo) / span).astype(np.uint8)
    # raster rows run top to bottom: row 0 is the largest y
    raster = gray.T[::-1, :]
    with _open_out(path, "wb") as fh:
        fh.write(f"P5\n{raster.shape[1]} {raster.shape[0]}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def emit_convergence_csv(reports, path) -> None:
    """reports: dict label -> ConvergenceReport.  The tail-fitted L-inf
    order is repeated on every row of its method."""
    with _open_out(path, "w") as fh:
        fh.write("method,h,linf,l1,order_tail\n")
        for label, report in reports.items():
            order = report.order_linf()
            for row in report.rows:
                fh.write(f"{label},{_fmt(row.h)},{_fmt(row.linf)},"
                         f"{_fmt(row.l1)},{_fmt(order)}\n")


def emit_trajectory_csv(trajectory, path) -> None:
    with _open_out(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in trajectory.points:
            fh.write(f"{_fmt(x)},{_fmt(y)}\n")
