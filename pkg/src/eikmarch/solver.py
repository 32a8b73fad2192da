"""High-level marching API: configuration, seeding, result assembly.

fmm_solve packs everything into flat arrays, hands off to the compiled
loop, and rebuilds Python-level fan entries from whatever the march
discovered.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import (
    ACCEPTED,
    CONSIDERED,
    CORNER_AUTO,
    CORNER_CONE,
    CORNER_SHADOW,
    ERR_CORNER_GRADIENT,
    ERR_FAN_OVERFLOW,
    ERR_MONOTONE_POP,
    EXCLUDED,
    FAR,
    MODE_JIT,
    MODE_STATIC,
    MODE_SWITCHING,
)
from .factors import (
    Cone,
    ConePlane,
    ConeSector,
    ConeTwoPlanes,
    FactorFunction,
    ZeroFactor,
    build_corner_factor,
    build_permeable_corner_factor,
    corner_faces,
    quadrant_arc_of,
)
from .geometry import BOUNDARY, FREE, INTERIOR, CornerCandidate, Grid2D, ObstacleWorld
from .kernels import (
    FK_CONE,
    FK_CONE_PLANE,
    FK_CONE_SECTOR,
    FK_CONE_TWO_PLANES,
    PARAMS_WIDTH,
    TWO_PI,
)
from .oracles import line_integrated_time
from .speed import FREE_SIDE, node_speeds, speed_eval, validate_speed

METHODS = ("original", "global_static", "localized_static",
           "switching_cones", "just_in_time")
CORNER_STYLES = {"cone": CORNER_CONE, "auto": CORNER_AUTO,
                 "shadow_only": CORNER_SHADOW}
BALL_MODES = ("none", "zero", "cone", "line_integrated")


class MarchingError(RuntimeError):
    """A solve violated an invariant it is required to maintain."""


@dataclass(frozen=True)
class FanEntry:
    """One factoring region: a factor applied within radius of its center."""

    center: tuple[float, float]
    factor: FactorFunction
    radius: float
    origin: str = "corner"
    direction: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("fan radius must be positive")
        fc = self.factor.center
        if fc[0] != self.center[0] or fc[1] != self.center[1]:
            raise ValueError(
                f"factor center {fc} does not match fan center {self.center}")


@dataclass(frozen=True)
class SolverConfig:
    """Method selection plus seeding for one solve.

    Use the classmethod constructors; the raw constructor checks only
    cross-field consistency.  Radii are validated against h at solve time.
    """

    method: str
    factor: FactorFunction | None = None
    fans: tuple[FanEntry, ...] = ()
    switch_corner: tuple[float, float] | None = None
    fan_radius: float = 0.18
    corner_style: str = "auto"
    ball: str = "none"
    ball_radius: float = 0.1
    # A factor whose characteristics disagree with the front (a global
    # cone marched around an obstacle, say) legitimately accepts nodes
    # out of order; comparison baselines set this False to finish anyway.
    strict_monotone: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; one of {METHODS}")
        if self.corner_style not in CORNER_STYLES:
            raise ValueError(f"unknown corner style {self.corner_style!r}")
        if self.ball not in BALL_MODES:
            raise ValueError(f"unknown ball mode {self.ball!r}")
        if self.method == "global_static" and self.factor is None:
            raise ValueError("global_static needs a factor")
        if self.method == "localized_static" and not self.fans:
            raise ValueError("localized_static needs at least one fan")
        if self.method == "switching_cones" and self.switch_corner is None:
            raise ValueError("switching_cones needs the corner location")
        if self.method == "just_in_time" and not self.fan_radius > 0.0:
            raise ValueError("fan radius must be positive")
        if not self.ball_radius > 0.0:
            raise ValueError("ball radius must be positive")

    @classmethod
    def original(cls, ball="none", ball_radius=0.1):
        return cls("original", ball=ball, ball_radius=ball_radius)

    @classmethod
    def global_static(cls, factor, ball="none", ball_radius=0.1):
        return cls("global_static", factor=factor, ball=ball,
                   ball_radius=ball_radius)

    @classmethod
    def localized_static(cls, fans, ball="none", ball_radius=0.1):
        return cls("localized_static", fans=tuple(fans), ball=ball,
                   ball_radius=ball_radius)

    @classmethod
    def switching_cones(cls, corner, ball="none", ball_radius=0.1):
        return cls("switching_cones", switch_corner=tuple(corner), ball=ball,
                   ball_radius=ball_radius)

    @classmethod
    def just_in_time(cls, fan_radius=0.18, corner_style="auto",
                     ball="none", ball_radius=0.1):
        return cls("just_in_time", fan_radius=fan_radius,
                   corner_style=corner_style, ball=ball,
                   ball_radius=ball_radius)


@dataclass(frozen=True)
class SolveStats:
    n_accepted: int
    n_pops: int
    n_updates: int
    heap_peak: int
    n_unreached: int
    n_warn_degenerate: int
    min_pop_dip: float


@dataclass
class SolveResult:
    grid: Grid2D
    u: np.ndarray                 # (nx, ny); +inf on excluded/unreached nodes
    accepted_order: np.ndarray    # linear node indices in acceptance order
    fans: list[FanEntry]
    stats: SolveStats
    status: np.ndarray            # (nx, ny) final node states
    fan_used: np.ndarray          # (nx, ny) fan index of last improving update


@dataclass(frozen=True)
class CornerDecision:
    rarefying: bool
    factor: FactorFunction | None = None


def choose_factor(p, fans) -> FactorFunction:
    """Factor applied at point p: nearest in-radius fan, earliest on ties,
    zero factor when no fan reaches p."""
    best = None
    best_d2 = math.inf
    for entry in fans:
        dx = p[0] - entry.center[0]
        dy = p[1] - entry.center[1]
        d2 = dx * dx + dy * dy
        if d2 <= entry.radius * entry.radius and d2 < best_d2:
            best = entry
            best_d2 = d2
    return best.factor if best is not None else ZeroFactor()


def approximate_characteristic_direction(grid, u, status, node):
    """Unit vector a ~ -grad u / |grad u| at a just-accepted node, from
    one-sided differences toward the smaller accepted neighbor per axis."""
    i, j = node
    idx_u = u.reshape(grid.nx, grid.ny)
    idx_s = status.reshape(grid.nx, grid.ny)
    g = [0.0, 0.0]
    val = idx_u[i, j]
    for axis, (di, dj) in enumerate(((1, 0), (0, 1))):
        lo_ok = i - di >= 0 and j - dj >= 0 and idx_s[i - di, j - dj] == ACCEPTED
        hi_ok = (i + di < grid.nx and j + dj < grid.ny
                 and idx_s[i + di, j + dj] == ACCEPTED)
        u_lo = idx_u[i - di, j - dj] if lo_ok else math.inf
        u_hi = idx_u[i + di, j + dj] if hi_ok else math.inf
        if not (lo_ok or hi_ok):
            continue
        if u_lo <= u_hi:
            g[axis] = (val - u_lo) / grid.h
        else:
            g[axis] = -(val - u_hi) / grid.h
    gn = math.hypot(g[0], g[1])
    if gn == 0.0:
        raise ValueError(f"zero characteristic gradient at node {node}")
    return (-g[0] / gn, -g[1] / gn)


def detect_rarefying_corner(candidate: CornerCandidate, a, f_free,
                            corner_style="auto") -> CornerDecision:
    """Classify an accepted corner candidate and build its fan factor.

    Regular when the continuation -a lies in the closed blocked arc (or
    the arc is the full circle); degenerate permeable geometry falls back
    to Regular with a warning.
    """
    if candidate.full:
        return CornerDecision(False)
    theta_na = math.atan2(-a[1], -a[0])
    lo = candidate.blocked_lo
    width = (candidate.blocked_hi - lo) % TWO_PI
    if (theta_na - lo) % TWO_PI <= width:
        return CornerDecision(False)
    if corner_style == "cone":
        return CornerDecision(True, Cone(candidate.pos, f_free))
    if candidate.permeable:
        upsilon = f_free / candidate.f_ob
        try:
            factor = build_permeable_corner_factor(
                candidate.pos, a, corner_faces(candidate.quadrant),
                upsilon, f_free)
        except ValueError as err:
            warnings.warn(f"corner {candidate.pos}: {err}; treated as regular")
            return CornerDecision(False)
        return CornerDecision(True, factor)
    factor = build_corner_factor(candidate.pos, a,
                                 quadrant_arc_of(candidate.quadrant), f_free)
    if corner_style == "shadow_only":
        factor = ConeSector(factor.center, factor.f, factor.arc)
    return CornerDecision(True, factor)


def source_cone_fans(world, speed, sources, radius):
    """One cone fan per source, at the local free-side speed."""
    fans = []
    for p in sources:
        p = tuple(p)
        fans.append(FanEntry(p, Cone(p, speed_eval(speed, p, FREE_SIDE)),
                             radius, origin="source"))
    return tuple(fans)


def initialize_sources(grid, world, speed, sources, config):
    """Seed u/status arrays for the marching loop.

    Returns (u, status, source_indices) over flat linear indices.  Ball
    modes accept every non-interior node within ball_radius of a source
    with the mode's value and leave the front to the relaxation pass.
    """
    if not sources:
        raise ValueError("need at least one source")
    n = grid.n_nodes
    u = np.full(n, np.inf)
    status = np.zeros(n, np.uint8)  # FAR
    mask = world.node_mask
    for k, ob in enumerate(world.obstacles):
        if not ob.permeable:
            sel = (mask == INTERIOR) & (world.interior_owner == k)
            status[sel.ravel()] = EXCLUDED

    src_idx = []
    for p in sources:
        i, j = grid.node_at(tuple(p))
        if mask[i, j] == INTERIOR:
            raise ValueError(
                f"source {tuple(p)} lies strictly inside an obstacle")
        src_idx.append(grid.linear_index(i, j))

    if config.ball == "none":
        for idx in src_idx:
            u[idx] = 0.0
            status[idx] = CONSIDERED
        return u, status, src_idx

    base = getattr(speed, "base", speed)
    X, Y = grid.meshgrid()
    seedable = (mask != INTERIOR).ravel()
    for p, idx in zip(sources, src_idx):
        p = tuple(p)
        dist = np.hypot(X - p[0], Y - p[1]).ravel()
        ball = (dist <= config.ball_radius) & seedable
        ball_nodes = np.flatnonzero(ball)
        if ball_nodes.size < 2:
            raise ValueError(
                f"ball of radius {config.ball_radius} around {p} holds no "
                f"node beyond the source (h={grid.h})")
        if config.ball == "zero":
            vals = np.zeros(ball_nodes.size)
        elif config.ball == "cone":
            vals = dist[ball_nodes] / speed_eval(speed, p, FREE_SIDE)
        else:
            vals = np.array([
                line_integrated_time(p, grid.node_xy(k // grid.ny, k % grid.ny),
                                     base)
                for k in ball_nodes])
        np.minimum.at(u, ball_nodes, vals)
        status[ball_nodes] = ACCEPTED
    return u, status, src_idx


def _interior_index_box(grid, ob):
    """Inclusive index box of nodes strictly inside one rectangle, or None."""
    i_lo = round((ob.lo[0] - grid.origin[0]) / grid.h) + 1
    i_hi = round((ob.hi[0] - grid.origin[0]) / grid.h) - 1
    j_lo = round((ob.lo[1] - grid.origin[1]) / grid.h) + 1
    j_hi = round((ob.hi[1] - grid.origin[1]) / grid.h) - 1
    if i_lo > i_hi or j_lo > j_hi:
        return None
    return (i_lo, i_hi, j_lo, j_hi)


def _pack_candidates(grid, world):
    cands = world.corner_candidates
    nc = len(cands)
    lookup = np.full(grid.n_nodes, -1, np.int64)
    qlo = np.empty(nc)
    qhi = np.empty(nc)
    full = np.zeros(nc, np.uint8)
    quad = np.empty(nc, np.int64)
    perm = np.zeros(nc, np.uint8)
    fob = np.zeros(nc)
    obox = np.full((nc, 4), -1, np.int64)
    for k, c in enumerate(cands):
        lookup[grid.linear_index(*c.node)] = k
        qlo[k] = c.blocked_lo
        qhi[k] = c.blocked_hi
        full[k] = 1 if c.full else 0
        quad[k] = c.quadrant
        perm[k] = 1 if c.permeable else 0
        fob[k] = c.f_ob if c.permeable else 0.0
        box = _interior_index_box(grid, world.obstacles[c.obstacle_id])
        if box is not None:
            obox[k] = box
    return cands, lookup, qlo, qhi, full, quad, perm, fob, obox


def _seed_fan_entries(grid, world, speed, speeds_flat, sources, config):
    """(entries, mode, switch_idx, jit_radius) for the configured method."""
    h = grid.h
    if config.method == "original":
        return [], MODE_STATIC, -1, 0.0
    if config.method == "global_static":
        entry = FanEntry(config.factor.center, config.factor, math.inf,
                         origin="config")
        return [entry], MODE_STATIC, -1, 0.0
    if config.method == "localized_static":
        for f in config.fans:
            if not f.radius > 2.0 * h:
                raise ValueError(
                    f"fan radius {f.radius} must exceed 2h = {2.0 * h}")
        return list(config.fans), MODE_STATIC, -1, 0.0
    if config.method == "switching_cones":
        if len(sources) != 1:
            raise ValueError("switching_cones expects a single source")
        src = tuple(sources[0])
        corner = tuple(config.switch_corner)
        ci, cj = grid.node_at(corner)
        switch_idx = grid.linear_index(ci, cj)
        entries = [
            FanEntry(src, Cone(src, speed_eval(speed, src, FREE_SIDE)),
                     math.inf, origin="source"),
            FanEntry(corner, Cone(corner, float(speeds_flat[switch_idx])),
                     math.inf, origin="config"),
        ]
        return entries, MODE_SWITCHING, switch_idx, 0.0
    # just_in_time
    if not config.fan_radius > 2.0 * h:
        raise ValueError(
            f"fan radius {config.fan_radius} must exceed 2h = {2.0 * h}")
    entries = list(source_cone_fans(world, speed, sources, config.fan_radius))
    return entries, MODE_JIT, -1, config.fan_radius


_ERR_NAMES = {
    ERR_MONOTONE_POP: "acceptance order decreased beyond tolerance",
    ERR_FAN_OVERFLOW: "fan table overflow",
    ERR_CORNER_GRADIENT: "zero gradient at a non-source corner candidate",
}


def _rebuild_corner_factor(kind, row, cand):
    center = (row[0], row[1])
    f = row[2]
    if kind == FK_CONE:
        return Cone(center, f)
    if kind == FK_CONE_SECTOR:
        return ConeSector(center, f, (row[5], row[6]))
    if kind == FK_CONE_PLANE:
        a = (-row[3], -row[4])
        q_lo, q_hi = quadrant_arc_of(cand.quadrant)
        theta_c = (q_lo + 0.5 * ((q_hi - q_lo) % TWO_PI)) % TWO_PI
        c = (math.cos(theta_c), math.sin(theta_c))
        return ConePlane(center, a, c, f, (row[5], row[6]))
    a = (-row[3], -row[4])
    b = (-row[5], -row[6])
    return ConeTwoPlanes(center, a, b, f, (row[7], row[8]), (row[9], row[10]),
                         alpha=row[11], beta=row[12], delta=row[13])


def fmm_solve(grid, world, speed, sources, config) -> SolveResult:
    """March the whole grid; see SolverConfig for method selection."""
    if world.grid is not grid and world.grid != grid:
        raise ValueError("world was built on a different grid")
    validate_speed(speed, world)
    speeds = node_speeds(speed, world).ravel()
    u, status, src_idx = initialize_sources(grid, world, speed, sources, config)

    cands, lookup, qlo, qhi, full, quad, perm, fob, obox = \
        _pack_candidates(grid, world)
    entries, mode, switch_idx, jit_radius = \
        _seed_fan_entries(grid, world, speed, speeds, sources, config)

    cap = len(entries) + (len(cands) if mode == MODE_JIT else 0) + 1
    fan_kind = np.zeros(cap, np.int64)
    fan_params = np.zeros((cap, PARAMS_WIDTH))
    fan_cx = np.zeros(cap)
    fan_cy = np.zeros(cap)
    fan_radius = np.zeros(cap)
    fan_box = np.full((cap, 4), -1, np.int64)
    fan_ax = np.full(cap, np.nan)
    fan_ay = np.full(cap, np.nan)
    fan_node = np.full(cap, -1, np.int64)
    for k, entry in enumerate(entries):
        kind, row = entry.factor.pack()
        fan_kind[k] = kind
        fan_params[k] = row
        fan_cx[k], fan_cy[k] = entry.center
        fan_radius[k] = entry.radius

    n = grid.n_nodes
    fan_used = np.full(n, -1, np.int64)
    accepted_order = np.full(n, -1, np.int64)
    stats = np.zeros(engine.N_STATS, np.int64)
    aux = np.zeros(engine.N_AUX)

    n_acc, n_fans = engine.solve_loop(
        grid.nx, grid.ny, grid.h, grid.origin[0], grid.origin[1],
        speeds, u, status, fan_used,
        mode, CORNER_STYLES[config.corner_style], switch_idx, jit_radius,
        1 if config.strict_monotone else 0,
        fan_kind, fan_params, fan_cx, fan_cy, fan_radius, fan_box,
        fan_ax, fan_ay, fan_node, len(entries),
        lookup, qlo, qhi, full, quad, perm, fob, obox,
        accepted_order, stats, aux)

    if stats[engine.ST_ERROR] != 0:
        code = int(stats[engine.ST_ERROR])
        raise MarchingError(
            f"{_ERR_NAMES.get(code, f'error {code}')} after "
            f"{int(stats[engine.ST_POPS])} pops "
            f"(min pop dip {aux[engine.AUX_MIN_DIP]:.3e})")
    if stats[engine.ST_UPDATES] > 4 * n_acc:
        raise MarchingError(
            f"{int(stats[engine.ST_UPDATES])} update attempts for "
            f"{n_acc} accepted nodes breaks the 4-per-node bound")

    fans = list(entries)
    for k in range(len(entries), n_fans):
        cand = cands[lookup[fan_node[k]]]
        factor = _rebuild_corner_factor(int(fan_kind[k]), fan_params[k], cand)
        fans.append(FanEntry((fan_cx[k], fan_cy[k]), factor,
                             float(fan_radius[k]), origin="corner",
                             direction=(float(fan_ax[k]), float(fan_ay[k]))))

    fan_used_2d = fan_used.reshape(grid.nx, grid.ny)
    for k in range(len(entries), n_fans):
        box = fan_box[k]
        if box[0] >= 0:
            patch = fan_used_2d[box[0]:box[1] + 1, box[2]:box[3] + 1]
            if np.any(patch == k):
                raise MarchingError(
                    f"fan {k} at ({fan_cx[k]}, {fan_cy[k]}) propagated into "
                    f"its own obstacle")

    return SolveResult(
        grid=grid,
        u=u.reshape(grid.nx, grid.ny),
        accepted_order=accepted_order[:n_acc].copy(),
        fans=fans,
        stats=SolveStats(
            n_accepted=int(n_acc),
            n_pops=int(stats[engine.ST_POPS]),
            n_updates=int(stats[engine.ST_UPDATES]),
            heap_peak=int(stats[engine.ST_HEAP_PEAK]),
            n_unreached=int(stats[engine.ST_UNREACHED]),
            n_warn_degenerate=int(stats[engine.ST_WARN_DEGENERATE]),
            min_pop_dip=float(aux[engine.AUX_MIN_DIP])),
        status=status.reshape(grid.nx, grid.ny),
        fan_used=fan_used_2d)
