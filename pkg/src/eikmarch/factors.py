"""Additive factor functions, Snell-angle relations, and corner-factor
construction.

Every factor packs itself into the (kind, params) encoding consumed by the
compiled kernels, and evaluation always goes through those kernels, so the
Python objects and the marching core can never drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import (
    FK_CONE,
    FK_CONE_PLANE,
    FK_CONE_SECTOR,
    FK_CONE_TWO_PLANES,
    FK_MIN_CONES,
    FK_SUM_CONES,
    FK_ZERO,
    MAX_CONES,
    PARAMS_WIDTH,
    TWO_PI,
)

AT_CENTER = -1

# face tangent directions of the four cell quadrants, by quadrant id;
# exact integer vectors, no trig
_QUAD_DIRS = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))


def _check_unit(v, name):
    if abs(math.hypot(v[0], v[1]) - 1.0) > 1e-12:
        raise ValueError(f"{name} must be a unit vector, got {v}")


def _new_row():
    return np.zeros(PARAMS_WIDTH, dtype=np.float64)


class FactorFunction:
    """Base for all factors; subclasses fill in pack()."""

    def pack(self) -> tuple[int, np.ndarray]:
        raise NotImplementedError

    def evaluate(self, x: float, y: float) -> tuple[float, tuple[float, float]]:
        """(value, gradient) at one point."""
        kind, params = self.pack()
        t, gx, gy = kernels.factor_eval(kind, params, float(x), float(y))
        return t, (gx, gy)

    @property
    def center(self) -> tuple[float, float]:
        return (0.0, 0.0)


@dataclass(frozen=True)
class ZeroFactor(FactorFunction):
    def pack(self):
        return FK_ZERO, _new_row()


@dataclass(frozen=True)
class Cone(FactorFunction):
    """T = |x - center| / f."""
    center_: tuple[float, float]
    f: float

    def __post_init__(self):
        if self.f <= 0.0:
            raise ValueError("cone speed must be positive")

    @property
    def center(self):
        return self.center_

    def pack(self):
        row = _new_row()
        row[0], row[1], row[2] = self.center_[0], self.center_[1], self.f
        return FK_CONE, row


@dataclass(frozen=True)
class ConePlane(FactorFunction):
    """Cone inside one angular sector, plane -a.(x - center)/f outside.

    The sector (ccw arc as (start, width)) runs from -a across the
    shadowed obstacle face to the corner bisector c, so the value is
    continuous along -a and jumps only along c, inside the obstacle.
    """
    center_: tuple[float, float]
    a: tuple[float, float]
    c: tuple[float, float]
    f: float
    arc: tuple[float, float]

    def __post_init__(self):
        _check_unit(self.a, "a")
        _check_unit(self.c, "c")

    @property
    def center(self):
        return self.center_

    def pack(self):
        row = _new_row()
        row[0], row[1], row[2] = self.center_[0], self.center_[1], self.f
        row[3], row[4] = -self.a[0], -self.a[1]
        row[5], row[6] = self.arc
        return FK_CONE_PLANE, row


@dataclass(frozen=True)
class ConeSector(FactorFunction):
    """Diagnostic variant: cone inside the sector, zero factor outside.

    Discontinuous at the sector edges; kept for comparison runs only.
    """
    center_: tuple[float, float]
    f: float
    arc: tuple[float, float]

    @property
    def center(self):
        return self.center_

    def pack(self):
        row = _new_row()
        row[0], row[1], row[2] = self.center_[0], self.center_[1], self.f
        row[5], row[6] = self.arc
        return FK_CONE_SECTOR, row


@dataclass(frozen=True)
class ConeTwoPlanes(FactorFunction):
    """Cone between -a and -b, plane -b.(x-c)/f up to +a, plane -a.(x-c)/f
    on the rest; the jump sits on the +a ray."""
    center_: tuple[float, float]
    a: tuple[float, float]
    b: tuple[float, float]
    f: float
    arc0: tuple[float, float]
    arc1: tuple[float, float]
    alpha: float = field(default=math.nan)
    beta: float = field(default=math.nan)
    delta: float = field(default=math.nan)

    def __post_init__(self):
        _check_unit(self.a, "a")
        _check_unit(self.b, "b")

    @property
    def center(self):
        return self.center_

    def pack(self):
        row = _new_row()
        row[0], row[1], row[2] = self.center_[0], self.center_[1], self.f
        row[3], row[4] = -self.a[0], -self.a[1]
        row[5], row[6] = -self.b[0], -self.b[1]
        row[7], row[8] = self.arc0
        row[9], row[10] = self.arc1
        row[11], row[12], row[13] = self.alpha, self.beta, self.delta
        return FK_CONE_TWO_PLANES, row


def _pack_cone_list(cones, kind):
    if not cones:
        raise ValueError("need at least one cone")
    if len(cones) > MAX_CONES:
        raise ValueError(f"at most {MAX_CONES} cones supported")
    row = _new_row()
    row[0] = len(cones)
    for k, c in enumerate(cones):
        row[1 + 3 * k] = c.center_[0]
        row[2 + 3 * k] = c.center_[1]
        row[3 + 3 * k] = c.f
    return kind, row


@dataclass(frozen=True)
class MinOfCones(FactorFunction):
    cones: tuple[Cone, ...]

    @property
    def center(self):
        return self.cones[0].center_

    def pack(self):
        return _pack_cone_list(self.cones, FK_MIN_CONES)


@dataclass(frozen=True)
class SumOfCones(FactorFunction):
    cones: tuple[Cone, ...]

    @property
    def center(self):
        return self.cones[0].center_

    def pack(self):
        return _pack_cone_list(self.cones, FK_SUM_CONES)


def snell_beta(alpha: float, upsilon: float) -> float:
    """Exit angle at the second obstacle face for arrival angle alpha.

    beta = arcsin(min(sqrt(ups^2 - sin^2 alpha), 1)).  upsilon == 1 is
    special-cased to pi/2 - alpha so that the fan angle cancels to an
    exact zero downstream.
    """
    if upsilon < 1.0:
        raise ValueError("speed ratio must be >= 1 (obstacles only slow down)")
    if not 0.0 <= alpha < 0.5 * math.pi:
        raise ValueError("arrival angle must lie in [0, pi/2)")
    if upsilon == 1.0:
        return 0.5 * math.pi - alpha
    s = math.sin(alpha)
    return math.asin(min(math.sqrt(upsilon * upsilon - s * s), 1.0))


def fan_sector_angle(alpha: float, beta: float) -> float:
    """Angular width of the rarefaction fan, delta = alpha + beta - pi/2.

    Written as (alpha - pi/2) + beta so the continuous case (beta exactly
    pi/2 - alpha) cancels to zero in floating point.
    """
    return max((alpha - 0.5 * math.pi) + beta, 0.0)


def refract_angles(theta1: float, upsilon: float) -> tuple[float, float, bool]:
    """Both refractions of a ray crossing a slow rectangle near a corner.

    Returns (theta2, theta3, total_internal): the angle inside the slab and
    the exit angle, with theta3 pinned at pi/2 when the exit ray grazes.
    """
    if upsilon < 1.0:
        raise ValueError("speed ratio must be >= 1")
    if not 0.0 <= theta1 < 0.5 * math.pi:
        raise ValueError("incidence angle must lie in [0, pi/2)")
    s1 = math.sin(theta1)
    theta2 = math.asin(s1 / upsilon)
    s3 = math.sqrt(upsilon * upsilon - s1 * s1)
    if s3 >= 1.0:
        return theta2, 0.5 * math.pi, True
    return theta2, math.asin(s3), False


@dataclass(frozen=True)
class SnellAngles:
    """The corner-fan angle triple for a given arrival direction."""
    alpha: float
    beta: float
    delta: float
    upsilon: float


def snell_angles(alpha: float, upsilon: float) -> SnellAngles:
    beta = snell_beta(alpha, upsilon)
    return SnellAngles(alpha, beta, fan_sector_angle(alpha, beta), upsilon)


def sector_classify(x, center, boundary_dirs) -> int:
    """Index of the ccw angular sector of (x - center).

    Sector k spans boundary_dirs[k] to boundary_dirs[k+1] (wrapping); a
    point exactly on a seam goes to the lowest-index sector containing it,
    which is where the factor formulas are continuous.  Returns AT_CENTER
    for x == center.
    """
    dx = x[0] - center[0]
    dy = x[1] - center[1]
    if dx == 0.0 and dy == 0.0:
        return AT_CENTER
    theta = math.atan2(dy, dx)
    n = len(boundary_dirs)
    angles = [math.atan2(d[1], d[0]) for d in boundary_dirs]
    for k in range(n):
        lo = angles[k]
        width = (angles[(k + 1) % n] - lo) % TWO_PI
        if n == 1:
            width = TWO_PI
        if (theta - lo) % TWO_PI <= width:
            return k
    return n - 1  # numerically unreachable


def build_corner_factor(corner, a, obstacle_arc, f) -> ConePlane:
    """Cone+plane factor for a rarefying corner of a solid obstacle.

    obstacle_arc is the (lo, hi) ccw angular span of the obstacle quadrant
    at the corner.  Raises when -a points into that quadrant (a regular
    corner, where no fan exists).
    """
    _check_unit(a, "a")
    q_lo, q_hi = obstacle_arc
    theta_na = math.atan2(-a[1], -a[0])
    if (theta_na - q_lo) % TWO_PI <= (q_hi - q_lo) % TWO_PI:
        raise ValueError("characteristic points into the obstacle: regular corner")
    row = _new_row()
    kernels.build_cone_plane(corner[0], corner[1], f, a[0], a[1], q_lo, q_hi, row)
    half = 0.5 * ((q_hi - q_lo) % TWO_PI)
    theta_c = (q_lo + half) % TWO_PI
    c = (math.cos(theta_c), math.sin(theta_c))
    return ConePlane(tuple(corner), tuple(a), c, f, (row[5], row[6]))


def build_permeable_corner_factor(corner, a, faces, upsilon, f_free) -> ConeTwoPlanes:
    """Cone+2-planes factor for a rarefying corner of a slow obstacle.

    faces is a pair ((n, t), (n, t)) of outward normals and corner-outgoing
    tangents of the two faces meeting at the corner, in either order; the
    arrival face is chosen by best alignment with a.  Raises for upsilon
    <= 1 and for degenerate arrival angles.
    """
    _check_unit(a, "a")
    if upsilon <= 1.0:
        raise ValueError("speed ratio must exceed 1 for a permeable corner fan")
    (nA, tA), (nB, tB) = faces
    for v, name in ((nA, "n1"), (tA, "t1"), (nB, "n2"), (tB, "t2")):
        _check_unit(v, name)
    row = _new_row()
    _, ok = kernels.build_cone_two_planes(
        corner[0], corner[1], f_free, a[0], a[1],
        nA[0], nA[1], tA[0], tA[1], nB[0], nB[1], tB[0], tB[1],
        upsilon, row)
    if not ok:
        raise ValueError("degenerate arrival angle at permeable corner")
    b = (-row[5], -row[6])
    return ConeTwoPlanes(tuple(corner), tuple(a), b, f_free,
                         (row[7], row[8]), (row[9], row[10]),
                         alpha=row[11], beta=row[12], delta=row[13])


def corner_faces(quadrant: int) -> tuple:
    """((n, t), (n, t)) for the two obstacle faces at a corner whose
    obstacle quadrant has the given id.  Exact axis-aligned vectors."""
    tA = _QUAD_DIRS[quadrant]
    nA = _QUAD_DIRS[(quadrant - 1) % 4]
    tB = _QUAD_DIRS[(quadrant + 1) % 4]
    nB = _QUAD_DIRS[(quadrant + 2) % 4]
    return ((nA, tA), (nB, tB))


def quadrant_arc_of(quadrant: int) -> tuple[float, float]:
    """The ccw angular span of one cell quadrant."""
    return (quadrant * 0.5 * math.pi, (quadrant + 1) * 0.5 * math.pi)
