"""Independent ground truths used to verify the marching solver.

Nothing here shares code with the solver: the linear-speed solution is a
closed form, travel times along straight rays come from adaptive
quadrature, and obstacle scenes with unit speed reduce to shortest
polyline paths over a visibility graph.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy.integrate import quad

from .geometry import Grid2D, ObstacleWorld, RectObstacle, INTERIOR

_EPS = 1e-12


def eval_linear_speed_solution(x, y, s0: float, v: tuple[float, float],
                               x0: tuple[float, float] = (0.0, 0.0)):
    """Arrival time from a point source in F(x) = 1/s0 + v.(x - x0).

    Vectorized over x, y.  For |v| -> 0 the formula degenerates to straight
    rays, u = s0 * |x - x0|.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x0[0]
    dy = y - x0[1]
    r2 = dx * dx + dy * dy
    vnorm = math.hypot(v[0], v[1])
    if vnorm < 1e-14:
        out = s0 * np.sqrt(r2)
        return float(out) if out.ndim == 0 else out
    F = 1.0 / s0 + v[0] * dx + v[1] * dy
    if np.any(F <= 0.0):
        raise ValueError("linear speed is not positive on the requested points")
    arg = 1.0 + 0.5 * s0 * vnorm * vnorm * r2 / F
    out = np.arccosh(np.maximum(arg, 1.0)) / vnorm
    return float(out) if out.ndim == 0 else out


def line_integrated_time(a: tuple[float, float], b: tuple[float, float], speed) -> float:
    """Travel time of the straight segment a->b through a smooth field.

    Integrates slowness 1/F along the segment with adaptive quadrature at
    absolute tolerance 1e-12; only meaningful when the segment stays in the
    free region.
    """
    f = speed.evaluate if hasattr(speed, "evaluate") else speed
    ax, ay = a
    dx = b[0] - ax
    dy = b[1] - ay
    length = math.hypot(dx, dy)
    if length == 0.0:
        return 0.0

    def slowness(t):
        return 1.0 / float(f(ax + t * dx, ay + t * dy))

    val, _ = quad(slowness, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return length * val


def _segment_blocked(px, py, qx, qy, lo, hi):
    """True when the open segment pq crosses the open rectangle interior.

    Clips the segment parameter interval against the closed rectangle
    (Liang-Barsky); a positive-length clip whose midpoint is strictly
    inside means the segment actually passes through the interior.
    Touching a wall or a corner is allowed.
    """
    t0, t1 = 0.0, 1.0
    dx = qx - px
    dy = qy - py
    for d, p0, blo, bhi in ((dx, px, lo[0], hi[0]), (dy, py, lo[1], hi[1])):
        if abs(d) < _EPS:
            if p0 < blo - _EPS or p0 > bhi + _EPS:
                return False
            continue
        ta = (blo - p0) / d
        tb = (bhi - p0) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return False
    tm = 0.5 * (t0 + t1)
    mx = px + tm * dx
    my = py + tm * dy
    return (lo[0] + _EPS < mx < hi[0] - _EPS) and (lo[1] + _EPS < my < hi[1] - _EPS)


def _visible(p, q, obstacles) -> bool:
    for ob in obstacles:
        if _segment_blocked(p[0], p[1], q[0], q[1], ob.lo, ob.hi):
            return False
    return True


def _graph_vertices(world: ObstacleWorld, sources) -> list[tuple[float, float]]:
    verts = [tuple(map(float, s)) for s in sources]
    for ob in world.obstacles:
        verts.extend([(ob.lo[0], ob.lo[1]), (ob.hi[0], ob.lo[1]),
                      (ob.lo[0], ob.hi[1]), (ob.hi[0], ob.hi[1])])
    return verts


def _corner_distances(world: ObstacleWorld, sources) -> tuple[list, np.ndarray]:
    """Multi-source Dijkstra over sources + obstacle corners, unit speed."""
    if any(ob.permeable for ob in world.obstacles):
        raise ValueError("visibility oracle only handles non-permeable obstacles")
    obstacles = world.obstacles
    verts = _graph_vertices(world, sources)
    n = len(verts)
    ns = len(sources)
    dist = np.full(n, np.inf)
    pq = []
    for s in range(ns):
        dist[s] = 0.0
        heapq.heappush(pq, (0.0, s))
    while pq:
        d, a = heapq.heappop(pq)
        if d > dist[a] + _EPS:
            continue
        for b in range(n):
            if b == a:
                continue
            step = math.hypot(verts[b][0] - verts[a][0], verts[b][1] - verts[a][1])
            nd = d + step
            if nd < dist[b] - _EPS and _visible(verts[a], verts[b], obstacles):
                dist[b] = nd
                heapq.heappush(pq, (nd, b))
    return verts, dist


def visibility_distance(world: ObstacleWorld, sources, p: tuple[float, float]) -> float:
    """Exact shortest-path distance to the nearest source at unit speed.

    Obstacles must be non-permeable; paths may run along obstacle walls and
    through corners.  Points strictly inside an obstacle get +inf.
    """
    for ob in world.obstacles:
        if ob.contains_interior(p[0], p[1]):
            return math.inf
    obstacles = world.obstacles
    verts, dist = _corner_distances(world, sources)
    best = math.inf
    for k, v in enumerate(verts):
        if not math.isfinite(dist[k]):
            continue
        cand = dist[k] + math.hypot(p[0] - v[0], p[1] - v[1])
        if cand < best and _visible(p, v, obstacles):
            best = cand
    return best


def visibility_field(world: ObstacleWorld, sources) -> np.ndarray:
    """visibility_distance evaluated at every grid node, vectorized.

    Nodes interior to the obstacle union get +inf.  Agrees with the point
    version on every node (the tests check this).
    """
    g = world.grid
    verts, dist = _corner_distances(world, sources)
    X, Y = g.meshgrid()
    out = np.full((g.nx, g.ny), np.inf)
    obstacles = world.obstacles
    for k, v in enumerate(verts):
        if not math.isfinite(dist[k]):
            continue
        cand = dist[k] + np.hypot(X - v[0], Y - v[1])
        better = cand < out
        if not better.any():
            continue
        vis = _visible_from_vertex(X, Y, v, obstacles)
        out = np.where(better & vis, cand, out)
    out[world.node_mask == INTERIOR] = np.inf
    return out


def _visible_from_vertex(X, Y, v, obstacles):
    """Vectorized open-segment-vs-rectangle test from one vertex to all nodes."""
    vis = np.ones(X.shape, dtype=bool)
    px, py = v
    dx = X - px
    dy = Y - py
    for ob in obstacles:
        t0 = np.zeros(X.shape)
        t1 = np.ones(X.shape)
        inside_band = np.ones(X.shape, dtype=bool)
        for d, p0, blo, bhi in ((dx, px, ob.lo[0], ob.hi[0]), (dy, py, ob.lo[1], ob.hi[1])):
            small = np.abs(d) < _EPS
            dd = np.where(small, 1.0, d)
            ta = (blo - p0) / dd
            tb = (bhi - p0) / dd
            lo_t = np.minimum(ta, tb)
            hi_t = np.maximum(ta, tb)
            t0 = np.where(small, t0, np.maximum(t0, lo_t))
            t1 = np.where(small, t1, np.minimum(t1, hi_t))
            inside_band &= np.where(small, (p0 >= blo - _EPS) & (p0 <= bhi + _EPS), True)
        tm = 0.5 * (t0 + t1)
        mx = px + tm * dx
        my = py + tm * dy
        crosses = (inside_band & (t0 < t1)
                   & (mx > ob.lo[0] + _EPS) & (mx < ob.hi[0] - _EPS)
                   & (my > ob.lo[1] + _EPS) & (my < ob.hi[1] - _EPS))
        vis &= ~crosses
    return vis
