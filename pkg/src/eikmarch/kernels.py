"""Compiled numerical kernels: factor evaluation and the upwind update.

Factors are encoded as (kind, params-row) pairs so the marching core can
evaluate them without touching Python objects.  Params layout by kind:

  CONE:            [0] cx  [1] cy  [2] F
  CONE_PLANE:      [0] cx  [1] cy  [2] F  [3,4] -a  [5] arc0 lo  [6] arc0 width
  CONE_TWO_PLANES: [0] cx  [1] cy  [2] F  [3,4] -a  [5,6] -b
                   [7] arc0 lo [8] arc0 width [9] arc1 lo [10] arc1 width
  MIN_CONES / SUM_CONES: [0] count n, then (cx, cy, F) triples from [1]

arc0 is the cone sector, arc1 the first plane sector (two-planes only);
the remaining directions fall to the last plane.  Arcs are closed ccw
intervals stored as (start angle, width); sectors are tested in order so
seam points land in the earlier sector, where the factor is continuous.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

FK_ZERO = 0
FK_CONE = 1
FK_CONE_PLANE = 2
FK_CONE_TWO_PLANES = 3
FK_MIN_CONES = 4
FK_SUM_CONES = 5
FK_CONE_SECTOR = 6

PARAMS_WIDTH = 20
MAX_CONES = 6

BR_TWO_SIDED = 0
BR_ONE_SIDED = 1


@njit(cache=True, inline="always")
def arc_contains(lo, width, theta):
    """Closed ccw arc membership: (theta - lo) mod 2pi <= width."""
    t = (theta - lo) % TWO_PI
    return t <= width


@njit(cache=True)
def factor_eval(kind, params, x, y):
    """Value and gradient of one factor at (x, y) -> (T, Tx, Ty).

    Cone gradients at the exact center are returned as zero; the solver
    never differentiates there (centers are Accepted first).
    """
    if kind == FK_ZERO:
        return 0.0, 0.0, 0.0

    if kind == FK_CONE:
        dx = x - params[0]
        dy = y - params[1]
        f = params[2]
        r = math.hypot(dx, dy)
        if r == 0.0:
            return 0.0, 0.0, 0.0
        return r / f, dx / (r * f), dy / (r * f)

    if kind == FK_CONE_PLANE:
        dx = x - params[0]
        dy = y - params[1]
        f = params[2]
        r = math.hypot(dx, dy)
        if r == 0.0:
            return 0.0, 0.0, 0.0
        theta = math.atan2(dy, dx)
        if arc_contains(params[5], params[6], theta):
            return r / f, dx / (r * f), dy / (r * f)
        nax = params[3]
        nay = params[4]
        return (nax * dx + nay * dy) / f, nax / f, nay / f

    if kind == FK_CONE_SECTOR:
        # diagnostic variant: cone inside the sector, zero factor outside
        dx = x - params[0]
        dy = y - params[1]
        f = params[2]
        r = math.hypot(dx, dy)
        if r == 0.0:
            return 0.0, 0.0, 0.0
        theta = math.atan2(dy, dx)
        if arc_contains(params[5], params[6], theta):
            return r / f, dx / (r * f), dy / (r * f)
        return 0.0, 0.0, 0.0

    if kind == FK_CONE_TWO_PLANES:
        dx = x - params[0]
        dy = y - params[1]
        f = params[2]
        r = math.hypot(dx, dy)
        if r == 0.0:
            return 0.0, 0.0, 0.0
        theta = math.atan2(dy, dx)
        if arc_contains(params[7], params[8], theta):
            return r / f, dx / (r * f), dy / (r * f)
        if arc_contains(params[9], params[10], theta):
            nbx = params[5]
            nby = params[6]
            return (nbx * dx + nby * dy) / f, nbx / f, nby / f
        nax = params[3]
        nay = params[4]
        return (nax * dx + nay * dy) / f, nax / f, nay / f

    if kind == FK_MIN_CONES:
        n = int(params[0])
        best = math.inf
        bx = 0.0
        by = 0.0
        for k in range(n):
            dx = x - params[1 + 3 * k]
            dy = y - params[2 + 3 * k]
            f = params[3 + 3 * k]
            r = math.hypot(dx, dy)
            t = r / f
            if t < best:
                best = t
                if r == 0.0:
                    bx = 0.0
                    by = 0.0
                else:
                    bx = dx / (r * f)
                    by = dy / (r * f)
        return best, bx, by

    # FK_SUM_CONES
    n = int(params[0])
    tot = 0.0
    gx = 0.0
    gy = 0.0
    for k in range(n):
        dx = x - params[1 + 3 * k]
        dy = y - params[2 + 3 * k]
        f = params[3 + 3 * k]
        r = math.hypot(dx, dy)
        tot += r / f
        if r > 0.0:
            gx += dx / (r * f)
            gy += dy / (r * f)
    return tot, gx, gy


@njit(cache=True)
def factor_value(kind, params, x, y):
    t, _, _ = factor_eval(kind, params, x, y)
    return t


@njit(cache=True)
def update_from_neighbors(mH, uH, hasH, mV, uV, hasV, t_node, h_over_f):
    """Shared upwind update in shifted variables -> (u, tau, branch).

    m = tau_neighbor - h*k*dT is the shifted per-axis value; with a zero
    factor m degenerates to the plain neighbor u and this is exactly the
    classic two-sided/one-sided scheme.  The two-sided branch returns the
    smallest quadratic root whose u = T + tau passes the upwinding test
    u >= max(uH, uV); equality is allowed.
    """
    if hasH and hasV:
        umax = max(uH, uV)
        s = mH + mV
        d = mH - mV
        disc = 2.0 * h_over_f * h_over_f - d * d
        if disc >= 0.0:
            root = math.sqrt(disc)
            tau = 0.5 * (s - root)
            if t_node + tau >= umax:
                return t_node + tau, tau, BR_TWO_SIDED
            tau = 0.5 * (s + root)
            if t_node + tau >= umax:
                return t_node + tau, tau, BR_TWO_SIDED
        if mH <= mV:
            tau = mH + h_over_f
        else:
            tau = mV + h_over_f
        return t_node + tau, tau, BR_ONE_SIDED
    if hasH:
        tau = mH + h_over_f
        return t_node + tau, tau, BR_ONE_SIDED
    tau = mV + h_over_f
    return t_node + tau, tau, BR_ONE_SIDED


@njit(cache=True)
def build_cone_plane(cx, cy, f, ax, ay, q_lo, q_hi, params):
    """Fill a CONE_PLANE params row.  a points from the corner toward the
    source; (q_lo, q_hi) is the obstacle quadrant as a ccw arc.

    The cone sector runs from -a across the shadowed obstacle face to the
    quadrant bisector c, on whichever side of -a the quadrant sits.
    """
    params[0] = cx
    params[1] = cy
    params[2] = f
    params[3] = -ax
    params[4] = -ay
    theta_na = math.atan2(-ay, -ax)
    e1 = (q_lo - theta_na) % TWO_PI   # ccw gap from -a to the first face
    e2 = (theta_na - q_hi) % TWO_PI   # cw gap from -a to the second face
    quarter = 0.25 * math.pi          # face-to-bisector angle
    if e1 <= e2:
        params[5] = theta_na
        params[6] = e1 + quarter
    else:
        params[5] = (q_lo + quarter) % TWO_PI   # the bisector c
        params[6] = quarter + e2
    return FK_CONE_PLANE


@njit(cache=True)
def build_cone_two_planes(cx, cy, f_free, ax, ay,
                          nAx, nAy, tAx, tAy, nBx, nBy, tBx, tBy,
                          upsilon, params):
    """Fill a CONE_TWO_PLANES params row; returns (kind, ok).

    (nA, tA) and (nB, tB) are the outward normals and corner-outgoing
    tangents of the two obstacle faces meeting at the corner.  The face
    whose normal best aligns with a is the arrival face; the refracted
    direction -b exits through the other one at the angle set by the
    speed ratio.  ok=False flags degenerate incidence (alpha outside
    (0, pi/2)); the caller then treats the corner as regular.

    Extra slots: [11] alpha  [12] beta  [13] delta.
    """
    dA = ax * nAx + ay * nAy
    dB = ax * nBx + ay * nBy
    if dA >= dB:
        cos_alpha = dA
        n2x, n2y, t2x, t2y = nBx, nBy, tBx, tBy
    else:
        cos_alpha = dB
        n2x, n2y, t2x, t2y = nAx, nAy, tAx, tAy
    if cos_alpha <= 1e-12 or cos_alpha >= 1.0 - 1e-15:
        # alpha >= pi/2 (arrival through the obstacle) or alpha ~ 0
        return FK_CONE_TWO_PLANES, False
    alpha = math.acos(cos_alpha)
    sin_beta = min(math.sqrt(max(upsilon * upsilon - math.sin(alpha) ** 2, 0.0)), 1.0)
    beta = math.asin(sin_beta)
    cos_beta = math.cos(beta)
    nbx = cos_beta * n2x + sin_beta * t2x
    nby = cos_beta * n2y + sin_beta * t2y
    delta = (alpha - 0.5 * math.pi) + beta
    if delta < 0.0:
        delta = 0.0

    params[0] = cx
    params[1] = cy
    params[2] = f_free
    params[3] = -ax
    params[4] = -ay
    params[5] = nbx
    params[6] = nby
    theta_na = math.atan2(-ay, -ax)
    cross = (-ax) * nby - (-ay) * nbx
    if cross >= 0.0:
        # -b lies ccw from -a: cone, then plane up to +a, then the rest
        params[7] = theta_na
        params[8] = delta
        params[9] = (theta_na + delta) % TWO_PI
        params[10] = math.pi - delta
    else:
        params[7] = (theta_na - delta) % TWO_PI
        params[8] = delta
        params[9] = (theta_na + math.pi) % TWO_PI
        params[10] = math.pi - delta
    params[11] = alpha
    params[12] = beta
    params[13] = delta
    return FK_CONE_TWO_PLANES, True
