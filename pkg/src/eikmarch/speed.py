"""Speed fields F(x) > 0 and their evaluation on grids.

Permeable obstacles carry a constant interior speed F_ob; everywhere else
the base field applies.  Nodes on an obstacle boundary take the free-side
value, matching the convention that walls belong to the free region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Grid2D, ObstacleWorld, INTERIOR

FREE_SIDE = "free"
OBSTACLE_SIDE = "obstacle"


@dataclass(frozen=True)
class ConstantSpeed:
    value: float = 1.0

    def evaluate(self, x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        if shape == ():
            return self.value
        return np.full(shape, self.value, dtype=float)


@dataclass(frozen=True)
class LinearSpeed:
    """F(x) = 1/s0 + v . (x - x0); the slowness at x0 is s0."""

    s0: float
    v: tuple[float, float]
    x0: tuple[float, float] = (0.0, 0.0)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 1.0 / self.s0 + self.v[0] * (x - self.x0[0]) + self.v[1] * (y - self.x0[1])


@dataclass(frozen=True)
class SinusoidalSpeed:
    """F(x, y) = base + amplitude * sin(2 pi x) * sin(2 pi y)."""

    base: float = 1.0
    amplitude: float = 0.3

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.base + self.amplitude * np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)


@dataclass(frozen=True)
class ObstacleSpeed:
    """Base field overridden by per-obstacle interior speeds.

    Classification is per-rectangle: strictly inside a permeable rectangle
    gives its f_ob, boundary points give the free-side (base) value unless
    side=OBSTACLE_SIDE asks for the obstacle-side limit.
    """

    base: object
    world: ObstacleWorld

    def evaluate(self, x, y, side: str = FREE_SIDE):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.asarray(self.base.evaluate(x, y), dtype=float).copy()
        for ob in self.world.obstacles:
            if not ob.permeable:
                continue
            if side == OBSTACLE_SIDE:
                hit = ((x >= ob.lo[0]) & (x <= ob.hi[0])
                       & (y >= ob.lo[1]) & (y <= ob.hi[1]))
            else:
                hit = ((x > ob.lo[0]) & (x < ob.hi[0])
                       & (y > ob.lo[1]) & (y < ob.hi[1]))
            out = np.where(hit, ob.f_ob, out)
        if out.ndim == 0:
            return float(out)
        return out


def speed_eval(speed, p: tuple[float, float], side: str = FREE_SIDE) -> float:
    """Point evaluation honoring the side hint for obstacle-aware fields."""
    if isinstance(speed, ObstacleSpeed):
        return float(speed.evaluate(p[0], p[1], side=side))
    return float(np.asarray(speed.evaluate(p[0], p[1])))


def node_speeds(speed, world: ObstacleWorld) -> np.ndarray:
    """Speed at every node as used by the marching update.

    Free and boundary nodes take the base (free-side) value; nodes strictly
    interior to the obstacle union take the owning obstacle's f_ob when it
    is permeable.  Non-permeable interiors keep the base value; the solver
    never updates them.
    """
    g = world.grid
    X, Y = g.meshgrid()
    base = speed.base if isinstance(speed, ObstacleSpeed) else speed
    F = np.asarray(base.evaluate(X, Y), dtype=float)
    if F.shape != (g.nx, g.ny):
        F = np.broadcast_to(F, (g.nx, g.ny)).copy()
    else:
        F = F.copy()
    inside = world.node_mask == INTERIOR
    if inside.any():
        for k, ob in enumerate(world.obstacles):
            if ob.permeable:
                F[inside & (world.interior_owner == k)] = ob.f_ob
    return F


def validate_speed(speed, world: ObstacleWorld) -> None:
    """Positivity of F on all nodes and upsilon > 1 for permeable obstacles."""
    g = world.grid
    F = node_speeds(speed, world)
    if not np.all(F > 0.0):
        i, j = np.unravel_index(int(np.argmin(F)), F.shape)
        raise ValueError(f"speed is not positive at node ({i},{j}): F={F[i, j]}")
    base = speed.base if isinstance(speed, ObstacleSpeed) else speed
    X, Y = g.meshgrid()
    Fb = np.asarray(base.evaluate(X, Y), dtype=float)
    for k, ob in enumerate(world.obstacles):
        if not ob.permeable:
            continue
        on = ((X >= ob.lo[0]) & (X <= ob.hi[0]) & (Y >= ob.lo[1]) & (Y <= ob.hi[1]))
        ups = Fb[on] / ob.f_ob
        if np.any(ups <= 1.0):
            raise ValueError(
                f"obstacle {k}: free/obstacle speed ratio must exceed 1, "
                f"got min {float(ups.min()):.6g}")
