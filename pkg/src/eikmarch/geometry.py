"""Grids, rectangular obstacles, and node classification.

The solver works on a uniform 2D grid over a rectangular domain.  Obstacles
are axis-aligned open rectangles whose edges lie on grid lines; the free
region keeps its obstacle *boundary* nodes, so walls act as traversable
corridors while strict interiors are either excluded (non-permeable) or
slow (permeable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# node classification codes
FREE = 0
BOUNDARY = 1
INTERIOR = 2

# quadrant ids around a node, counterclockwise from +x
QUAD_NE = 0
QUAD_NW = 1
QUAD_SW = 2
QUAD_SE = 3

ALIGN_TOL = 1e-9  # relative to h; obstacle edges must sit on grid lines

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Grid2D:
    """Uniform node-centered grid: node (i, j) sits at origin + (i*h, j*h)."""

    nx: int
    ny: int
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.h > 0.0):
            raise ValueError(f"grid spacing must be positive, got {self.h}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def xmax(self) -> float:
        return self.origin[0] + (self.nx - 1) * self.h

    @property
    def ymax(self) -> float:
        return self.origin[1] + (self.ny - 1) * self.h

    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def node_xy(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.h, self.origin[1] + j * self.h)

    def linear_index(self, i: int, j: int) -> int:
        """Deterministic node ordering used for heap tie-breaking: i*ny + j."""
        return i * self.ny + j

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as (nx, ny) arrays indexed [i, j]."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def node_at(self, p: tuple[float, float]) -> tuple[int, int]:
        """Map a point to the grid node it coincides with.

        Raises ValueError when the point is farther than ALIGN_TOL*h from
        any node; callers rely on sources and obstacle corners being
        grid-aligned.
        """
        tol = ALIGN_TOL * self.h
        i = round((p[0] - self.origin[0]) / self.h)
        j = round((p[1] - self.origin[1]) / self.h)
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise ValueError(f"point {p} is outside the grid")
        x, y = self.node_xy(i, j)
        if abs(x - p[0]) > tol or abs(y - p[1]) > tol:
            raise ValueError(f"point {p} does not coincide with a grid node (h={self.h})")
        return (i, j)

    def contains(self, p: tuple[float, float]) -> bool:
        eps = ALIGN_TOL * self.h
        return (self.origin[0] - eps <= p[0] <= self.xmax + eps
                and self.origin[1] - eps <= p[1] <= self.ymax + eps)


@dataclass(frozen=True)
class RectObstacle:
    """Open axis-aligned rectangle.  f_ob=None means non-permeable."""

    lo: tuple[float, float]
    hi: tuple[float, float]
    f_ob: float | None = None

    def __post_init__(self):
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise ValueError(f"degenerate obstacle rectangle lo={self.lo} hi={self.hi}")
        if self.f_ob is not None and not (self.f_ob > 0.0):
            raise ValueError(f"obstacle speed must be positive, got {self.f_ob}")

    @property
    def permeable(self) -> bool:
        return self.f_ob is not None

    def contains_interior(self, x: float, y: float) -> bool:
        return self.lo[0] < x < self.hi[0] and self.lo[1] < y < self.hi[1]

    def touches(self, x: float, y: float) -> bool:
        return self.lo[0] <= x <= self.hi[0] and self.lo[1] <= y <= self.hi[1]


@dataclass(frozen=True)
class CornerCandidate:
    """Grid node where the free region has a reflex (3*pi/2) corner.

    blocked_lo/blocked_hi describe the counterclockwise angular arc around
    the node that a characteristic cannot have come *out of*: the obstacle
    quadrant itself plus any out-of-domain quadrants.  full=True marks
    degenerate candidates whose blocked arc covers the whole circle.
    """

    node: tuple[int, int]
    pos: tuple[float, float]
    quadrant: int
    obstacle_id: int
    blocked_lo: float
    blocked_hi: float
    full: bool
    permeable: bool
    f_ob: float


class ObstacleWorld:
    """Grid plus obstacle union: node masks and corner candidates.

    Node classification uses the union of the closed rectangles, so two
    obstacles glued along a face have no free corridor between them, while
    every node on the outer boundary of the union stays in the free region.
    """

    def __init__(self, grid: Grid2D, obstacles: list[RectObstacle] | tuple[RectObstacle, ...] = ()):
        self.grid = grid
        self.obstacles = list(obstacles)
        self._check_alignment()
        self._build_masks()
        self.corner_candidates = enumerate_corner_candidates(self)
        self._cand_by_node = {c.node: c for c in self.corner_candidates}

    def _check_alignment(self):
        g = self.grid
        tol = ALIGN_TOL * g.h
        for k, ob in enumerate(self.obstacles):
            for v in (ob.lo[0], ob.hi[0]):
                if abs(v - g.origin[0] - round((v - g.origin[0]) / g.h) * g.h) > tol:
                    raise ValueError(f"obstacle {k}: x={v} is not on a grid line (h={g.h})")
            for v in (ob.lo[1], ob.hi[1]):
                if abs(v - g.origin[1] - round((v - g.origin[1]) / g.h) * g.h) > tol:
                    raise ValueError(f"obstacle {k}: y={v} is not on a grid line (h={g.h})")
            if not (g.contains(ob.lo) and g.contains(ob.hi)):
                raise ValueError(f"obstacle {k} extends outside the domain")

    def _build_masks(self):
        g = self.grid
        # cell (i, j) spans [x_i, x_i+h] x [y_j, y_j+h]; centers never fall on
        # obstacle edges because edges are grid-aligned, so containment of the
        # center classifies the whole cell exactly.
        cx = g.origin[0] + g.h * (np.arange(g.nx - 1) + 0.5)
        cy = g.origin[1] + g.h * (np.arange(g.ny - 1) + 0.5)
        CX, CY = np.meshgrid(cx, cy, indexing="ij")
        cell_owner = np.full((g.nx - 1, g.ny - 1), -1, dtype=np.int32)
        for k in reversed(range(len(self.obstacles))):
            ob = self.obstacles[k]
            inside = ((CX > ob.lo[0]) & (CX < ob.hi[0])
                      & (CY > ob.lo[1]) & (CY < ob.hi[1]))
            cell_owner[inside] = k  # reversed loop -> lowest id wins
        covered = cell_owner >= 0

        # a node is interior to the union iff all four incident quadrants
        # exist and are covered; domain-edge nodes can never be interior.
        interior = np.zeros((g.nx, g.ny), dtype=bool)
        interior[1:-1, 1:-1] = (covered[:-1, :-1] & covered[1:, :-1]
                                & covered[:-1, 1:] & covered[1:, 1:])

        X, Y = g.meshgrid()
        touching = np.zeros((g.nx, g.ny), dtype=bool)
        for ob in self.obstacles:
            touching |= ((X >= ob.lo[0]) & (X <= ob.hi[0])
                         & (Y >= ob.lo[1]) & (Y <= ob.hi[1]))

        mask = np.full((g.nx, g.ny), FREE, dtype=np.int8)
        mask[touching] = BOUNDARY
        mask[interior] = INTERIOR

        owner = np.full((g.nx, g.ny), -1, dtype=np.int32)
        if interior.any():
            # lowest owning cell id among the four incident cells
            co = np.where(covered, cell_owner, np.iinfo(np.int32).max)
            oo = np.minimum.reduce([co[:-1, :-1], co[1:, :-1], co[:-1, 1:], co[1:, 1:]])
            owner[1:-1, 1:-1] = np.where(interior[1:-1, 1:-1], oo, -1).astype(np.int32)

        self.cell_owner = cell_owner
        self.node_mask = mask
        self.interior_owner = owner

    def classify_node(self, i: int, j: int) -> int:
        return int(self.node_mask[i, j])

    def candidate_at(self, node: tuple[int, int]) -> CornerCandidate | None:
        return self._cand_by_node.get(node)


def point_in_obstacles(world: ObstacleWorld, p: tuple[float, float]):
    """Classify an arbitrary point against the obstacle list.

    Returns (code, obstacle_id) with code in {FREE, BOUNDARY, INTERIOR} using
    per-rectangle open semantics: Interior requires being strictly inside a
    single rectangle (lowest id wins), touching any closed rectangle gives
    Boundary.  Raises ValueError outside the domain.
    """
    if not world.grid.contains(p):
        raise ValueError(f"point {p} is outside the domain")
    x, y = p
    for k, ob in enumerate(world.obstacles):
        if ob.contains_interior(x, y):
            return INTERIOR, k
    for k, ob in enumerate(world.obstacles):
        if ob.touches(x, y):
            return BOUNDARY, k
    return FREE, None


def _quadrant_arc(quads: set[int]) -> tuple[float, float, bool]:
    """Merge a set of quadrant ids into one ccw angular arc [lo, hi].

    The blocked quadrants at a corner candidate are always contiguous on the
    circle, so a single arc suffices.  Returns (lo, hi, full).
    """
    if len(quads) >= 4:
        return 0.0, TWO_PI, True
    start = None
    for q in range(4):
        if q in quads and (q - 1) % 4 not in quads:
            start = q
            break
    if start is None:  # empty set; callers never pass one
        return 0.0, 0.0, False
    n = 1
    while (start + n) % 4 in quads:
        n += 1
    lo = start * (math.pi / 2.0)
    return lo, lo + n * (math.pi / 2.0), False


def enumerate_corner_candidates(world: ObstacleWorld) -> list[CornerCandidate]:
    """Find every node with exactly one obstacle quadrant among its four.

    Candidates on the outer domain edge are kept; their blocked arc absorbs
    the out-of-domain quadrants so that rarefaction detection never points a
    fan out of the domain.
    """
    g = world.grid
    covered = world.cell_owner >= 0
    # pad with False outside the cell array; out-of-domain quadrants are
    # tracked separately from obstacle coverage
    cov = np.zeros((g.nx + 1, g.ny + 1), dtype=bool)
    cov[1:-1, 1:-1] = covered
    exists = np.zeros((g.nx + 1, g.ny + 1), dtype=bool)
    exists[1:-1, 1:-1] = True

    out: list[CornerCandidate] = []
    # quadrant -> incident cell offset relative to node (i, j): cell (i+di-1, j+dj-1)
    offsets = {QUAD_NE: (1, 1), QUAD_NW: (0, 1), QUAD_SW: (0, 0), QUAD_SE: (1, 0)}
    n_ob = (cov[1:, 1:].astype(np.int8) + cov[:-1, 1:] + cov[:-1, :-1] + cov[1:, :-1])
    ii, jj = np.nonzero(n_ob == 1)
    for i, j in zip(ii.tolist(), jj.tolist()):
        quad = None
        blocked = set()
        for q, (di, dj) in offsets.items():
            if cov[i + di, j + dj]:
                quad = q
                blocked.add(q)
            elif not exists[i + di, j + dj]:
                blocked.add(q)
        ci, cj = offsets[quad]
        ob_id = int(world.cell_owner[i + ci - 1, j + cj - 1])
        lo, hi, full = _quadrant_arc(blocked)
        ob = world.obstacles[ob_id]
        out.append(CornerCandidate(
            node=(i, j),
            pos=g.node_xy(i, j),
            quadrant=quad,
            obstacle_id=ob_id,
            blocked_lo=lo,
            blocked_hi=hi,
            full=full,
            permeable=ob.permeable,
            f_ob=ob.f_ob if ob.permeable else math.nan,
        ))
    out.sort(key=lambda c: (c.node[0], c.node[1]))
    return out
