"""Approximate optimal paths by gradient descent on a solved value field."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import point_in_obstacles, INTERIOR

STALL_GRADIENT = 1e-12
ASCENT_TOL_REL = 1e-9


class TrajectoryStatus(enum.Enum):
    REACHED_SOURCE = "reached_source"
    MAX_STEPS = "max_steps"
    STALLED = "stalled"


@dataclass(frozen=True)
class Trajectory:
    points: np.ndarray          # (k, 2)
    length: float
    status: TrajectoryStatus


def _node_gradient(u, nx, ny, h, i, j):
    """One node's gradient: central where both neighbors are finite,
    one-sided otherwise, zero where no finite neighbor exists."""
    gx = 0.0
    gy = 0.0
    c = u[i, j]
    lo = u[i - 1, j] if i > 0 else np.inf
    hi = u[i + 1, j] if i < nx - 1 else np.inf
    lo_ok = np.isfinite(lo)
    hi_ok = np.isfinite(hi)
    if lo_ok and hi_ok:
        gx = (hi - lo) / (2.0 * h)
    elif lo_ok:
        gx = (c - lo) / h
    elif hi_ok:
        gx = (hi - c) / h
    lo = u[i, j - 1] if j > 0 else np.inf
    hi = u[i, j + 1] if j < ny - 1 else np.inf
    lo_ok = np.isfinite(lo)
    hi_ok = np.isfinite(hi)
    if lo_ok and hi_ok:
        gy = (hi - lo) / (2.0 * h)
    elif lo_ok:
        gy = (c - lo) / h
    elif hi_ok:
        gy = (hi - c) / h
    return gx, gy


def _cell_of(grid, p):
    fx = (p[0] - grid.origin[0]) / grid.h
    fy = (p[1] - grid.origin[1]) / grid.h
    ci = min(max(int(math.floor(fx)), 0), grid.nx - 2)
    cj = min(max(int(math.floor(fy)), 0), grid.ny - 2)
    return ci, cj, fx - ci, fy - cj


def _corner_data(u, grid, ci, cj):
    corners = ((ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1))
    vals = [u[i, j] for i, j in corners]
    return corners, vals


def _blend(grid, p, ci, cj, fx, fy, corners, vals, fields):
    """Bilinear blend of per-corner data, falling back to inverse-distance
    weights over finite corners when the cell touches +inf."""
    finite = [np.isfinite(v) for v in vals]
    if all(finite):
        w = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)
    else:
        if not any(finite):
            raise ValueError(
                f"all four cell corners are infinite near {tuple(p)}")
        w = [0.0, 0.0, 0.0, 0.0]
        for k, (i, j) in enumerate(corners):
            if not finite[k]:
                continue
            x, y = grid.node_xy(i, j)
            d = math.hypot(p[0] - x, p[1] - y)
            if d == 0.0:
                w = [0.0, 0.0, 0.0, 0.0]
                w[k] = 1.0
                break
            w[k] = 1.0 / d
        s = sum(w)
        w = [wk / s for wk in w]
    # skip zero weights: infinite corners carry infinite data
    return [sum(wk * f[k] for k, wk in enumerate(w) if wk != 0.0)
            for f in fields]


def interpolate_gradient(u, grid, world, p):
    """Gradient of u at an arbitrary point from blended node gradients."""
    code, ob_id = point_in_obstacles(world, tuple(p))
    if code == INTERIOR and not world.obstacles[ob_id].permeable:
        raise ValueError(f"point {tuple(p)} is inside a non-permeable obstacle")
    ci, cj, fx, fy = _cell_of(grid, p)
    corners, vals = _corner_data(u, grid, ci, cj)
    grads = [_node_gradient(u, grid.nx, grid.ny, grid.h, i, j)
             for i, j in corners]
    gx, gy = _blend(grid, p, ci, cj, fx, fy, corners, vals,
                    ([g[0] for g in grads], [g[1] for g in grads]))
    return (gx, gy)


def interpolate_value(u, grid, p):
    ci, cj, fx, fy = _cell_of(grid, p)
    corners, vals = _corner_data(u, grid, ci, cj)
    return _blend(grid, p, ci, cj, fx, fy, corners, vals, (vals,))[0]


def _chord_entry(p, q, ob):
    """Where the open segment p->q first enters the open rectangle.

    Returns (t_entry, axis, face_coordinate) or None.  Running exactly
    along a face does not count as entering."""
    t0, t1 = -math.inf, math.inf
    axis, face = -1, 0.0
    for k, (c0, d, lo, hi) in enumerate(
            ((p[0], q[0] - p[0], ob.lo[0], ob.hi[0]),
             (p[1], q[1] - p[1], ob.lo[1], ob.hi[1]))):
        if abs(d) < 1e-300:
            if not lo < c0 < hi:
                return None
            continue
        ta = (lo - c0) / d
        tb = (hi - c0) / d
        enter, leave = (ta, tb) if ta < tb else (tb, ta)
        if enter > t0:
            t0, axis = enter, k
            face = lo if d > 0.0 else hi
        t1 = min(t1, leave)
    lo_t = max(t0, 0.0)
    hi_t = min(t1, 1.0)
    if axis < 0 or not lo_t < hi_t:
        return None
    tm = 0.5 * (lo_t + hi_t)
    mx = p[0] + tm * (q[0] - p[0])
    my = p[1] + tm * (q[1] - p[1])
    if not ob.contains_interior(mx, my):
        return None
    return (lo_t, axis, face)


def _slide_step(world, p, q):
    """Keep the step p->q out of non-permeable interiors: whenever its
    chord would cut through one, slide the endpoint along the first face
    it enters.  Cheap substitute for exact wall-following."""
    for _ in range(4):
        hit = None
        for ob in world.obstacles:
            if ob.permeable:
                continue
            entry = _chord_entry(p, q, ob)
            if entry is not None and (hit is None or entry[0] < hit[0]):
                hit = entry
        if hit is None:
            return q
        _, axis, face = hit
        if axis == 0:
            q = (face, q[1])
        elif axis == 1:
            q = (q[0], face)
        else:
            return _project_free(world, q)
    return _project_free(world, q)


def _project_free(world, p):
    """Push a point out of any non-permeable interior onto the nearest
    face; repeated in case the projection lands inside a neighbor."""
    x, y = p
    for _ in range(4):
        moved = False
        for ob in world.obstacles:
            if ob.permeable or not ob.contains_interior(x, y):
                continue
            shifts = ((x - ob.lo[0], 0), (ob.hi[0] - x, 1),
                      (y - ob.lo[1], 2), (ob.hi[1] - y, 3))
            _, face = min(shifts)
            if face == 0:
                x = ob.lo[0]
            elif face == 1:
                x = ob.hi[0]
            elif face == 2:
                y = ob.lo[1]
            else:
                y = ob.hi[1]
            moved = True
        if not moved:
            return (x, y)
    return (x, y)


def _clamp_domain(grid, p):
    return (min(max(p[0], grid.origin[0]), grid.xmax),
            min(max(p[1], grid.origin[1]), grid.ymax))


def extract_trajectory(u, grid, world, start, sources,
                       step=None, capture=None, max_steps=None) -> Trajectory:
    """Follow -grad u from start toward the sources with midpoint steps.

    Stops within `capture` of a source (appending the exact source point),
    on a vanishing gradient, or after max_steps.  Steps that would enter a
    non-permeable obstacle are projected onto its boundary.  Interpolated
    u must not increase along the path; a rise beyond rounding aborts.
    """
    h = grid.h
    if step is None:
        step = 0.5 * h
    if capture is None:
        capture = h
    if max_steps is None:
        diag = math.hypot(grid.xmax - grid.origin[0],
                          grid.ymax - grid.origin[1])
        max_steps = int(20.0 * diag / step) + 100

    code, ob_id = point_in_obstacles(world, tuple(start))
    if code == INTERIOR and not world.obstacles[ob_id].permeable:
        raise ValueError(f"trajectory start {tuple(start)} is inside a "
                         "non-permeable obstacle")

    finite = u[np.isfinite(u)]
    ascent_tol = ASCENT_TOL_REL * (float(finite.max()) if finite.size else 1.0)

    p = tuple(start)
    points = [p]
    length = 0.0
    u_here = interpolate_value(u, grid, p)
    status = TrajectoryStatus.MAX_STEPS

    for _ in range(max_steps):
        hit = None
        for s in sources:
            if math.hypot(p[0] - s[0], p[1] - s[1]) <= capture:
                hit = tuple(s)
                break
        if hit is not None:
            if hit != p:
                length += math.hypot(p[0] - hit[0], p[1] - hit[1])
                points.append(hit)
            status = TrajectoryStatus.REACHED_SOURCE
            break

        gx, gy = interpolate_gradient(u, grid, world, p)
        gn = math.hypot(gx, gy)
        if gn < STALL_GRADIENT:
            status = TrajectoryStatus.STALLED
            break
        mid = _clamp_domain(grid, _slide_step(world, p, (
            p[0] - 0.5 * step * gx / gn, p[1] - 0.5 * step * gy / gn)))
        gx, gy = interpolate_gradient(u, grid, world, mid)
        gn = math.hypot(gx, gy)
        if gn < STALL_GRADIENT:
            status = TrajectoryStatus.STALLED
            break
        nxt = _clamp_domain(grid, _slide_step(world, p, (
            p[0] - step * gx / gn, p[1] - step * gy / gn)))
        u_next = interpolate_value(u, grid, nxt)
        if u_next > u_here + ascent_tol:
            raise RuntimeError(
                f"u increased along the trajectory at {nxt}: "
                f"{u_here:.12g} -> {u_next:.12g}")
        length += math.hypot(nxt[0] - p[0], nxt[1] - p[1])
        points.append(nxt)
        p = nxt
        u_here = u_next

    return Trajectory(np.array(points), length, status)
