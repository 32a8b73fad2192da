"""Compiled marching core.

One loop drives every solver mode.  State lives in flat arrays over linear
node indices (i*ny + j) and factors are rows of a packed parameter table,
so the hot path never touches Python objects.  The factor for a node is
chosen by nearest fan center at update time, and the same factor shifts
the tau values of its stencil neighbors; corner fans appear mid-march in
just-in-time mode, right when their corner node is accepted.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .heap import heap_insert, heap_pop
from .kernels import (
    FK_CONE,
    FK_CONE_SECTOR,
    FK_ZERO,
    PARAMS_WIDTH,
    TWO_PI,
    build_cone_plane,
    build_cone_two_planes,
    factor_eval,
    factor_value,
    update_from_neighbors,
)

# node states
FAR = 0
CONSIDERED = 1
ACCEPTED = 2
EXCLUDED = 3

# marching modes
MODE_STATIC = 0
MODE_SWITCHING = 1
MODE_JIT = 2

# corner factor styles for just-in-time fans
CORNER_CONE = 0
CORNER_AUTO = 1
CORNER_SHADOW = 2

# stats slots
ST_POPS = 0
ST_UPDATES = 1
ST_HEAP_PEAK = 2
ST_UNREACHED = 3
ST_WARN_DEGENERATE = 4
ST_ERROR = 5
N_STATS = 6

AUX_MIN_DIP = 0
N_AUX = 1

ERR_NONE = 0
ERR_MONOTONE_POP = 1
ERR_FAN_OVERFLOW = 2
ERR_CORNER_GRADIENT = 3

# Pops may dip below the previous pop by rounding noise near fan centers;
# a dip beyond this relative tolerance means upwind causality is broken.
MONOTONE_ABORT_TOL = 1e-9

# face tangents of the four cell quadrants, by quadrant id
_DIRS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


@njit(cache=True)
def _choose_factor(x, y, i, j, mode, active_fan, n_fans,
                   fan_cx, fan_cy, fan_radius, fan_box):
    """Fan index used at node (x, y); -1 means the zero factor.

    Nearest center within its radius wins, earliest-added on ties; fans
    never apply inside their own obstacle's interior index box.
    """
    if mode == MODE_SWITCHING:
        return active_fan
    best = -1
    best_d2 = np.inf
    for k in range(n_fans):
        if fan_box[k, 0] >= 0:
            if (fan_box[k, 0] <= i and i <= fan_box[k, 1]
                    and fan_box[k, 2] <= j and j <= fan_box[k, 3]):
                continue
        dx = x - fan_cx[k]
        dy = y - fan_cy[k]
        d2 = dx * dx + dy * dy
        r = fan_radius[k]
        if d2 <= r * r and d2 < best_d2:
            best = k
            best_d2 = d2
    return best


@njit(cache=True)
def _relax(idx, nx, ny, h, ox, oy, speeds, u, status, fan_used,
           mode, active_fan, n_fans,
           fan_kind, fan_params, fan_cx, fan_cy, fan_radius, fan_box,
           zero_params, heap_nodes, heap_pos, heap_keys, heap_size):
    """Update the non-final neighbors of a just-accepted node.

    Returns (heap size, number of update attempts).
    """
    i = idx // ny
    j = idx % ny
    n_att = 0
    for step in range(4):
        if step == 0:
            ni = i - 1
            nj = j
        elif step == 1:
            ni = i + 1
            nj = j
        elif step == 2:
            ni = i
            nj = j - 1
        else:
            ni = i
            nj = j + 1
        if ni < 0 or ni >= nx or nj < 0 or nj >= ny:
            continue
        nb = ni * ny + nj
        st = status[nb]
        if st == ACCEPTED or st == EXCLUDED:
            continue
        n_att += 1

        x = ox + ni * h
        y = oy + nj * h
        sel = _choose_factor(x, y, ni, nj, mode, active_fan, n_fans,
                             fan_cx, fan_cy, fan_radius, fan_box)
        if sel >= 0:
            kind = fan_kind[sel]
            params = fan_params[sel]
        else:
            kind = FK_ZERO
            params = zero_params
        t_node, tx, ty = factor_eval(kind, params, x, y)

        # horizontal stencil: smaller accepted neighbor, ties to i-1
        u_l = np.inf
        u_r = np.inf
        if ni > 0 and status[nb - ny] == ACCEPTED:
            u_l = u[nb - ny]
        if ni < nx - 1 and status[nb + ny] == ACCEPTED:
            u_r = u[nb + ny]
        has_h = False
        u_h = np.inf
        m_h = 0.0
        if u_l <= u_r:
            if u_l < np.inf:
                has_h = True
                u_h = u_l
                m_h = (u_l - factor_value(kind, params, x - h, y)) - h * tx
        else:
            has_h = True
            u_h = u_r
            m_h = (u_r - factor_value(kind, params, x + h, y)) + h * tx

        # vertical stencil, ties to j-1
        u_d = np.inf
        u_u = np.inf
        if nj > 0 and status[nb - 1] == ACCEPTED:
            u_d = u[nb - 1]
        if nj < ny - 1 and status[nb + 1] == ACCEPTED:
            u_u = u[nb + 1]
        has_v = False
        u_v = np.inf
        m_v = 0.0
        if u_d <= u_u:
            if u_d < np.inf:
                has_v = True
                u_v = u_d
                m_v = (u_d - factor_value(kind, params, x, y - h)) - h * ty
        else:
            has_v = True
            u_v = u_u
            m_v = (u_u - factor_value(kind, params, x, y + h)) + h * ty

        if not (has_h or has_v):
            continue
        hk = h / speeds[nb]
        unew, tau, branch = update_from_neighbors(
            m_h, u_h, has_h, m_v, u_v, has_v, t_node, hk)
        used = sel
        if sel >= 0:
            # A factor seen from the wrong side (its hidden seam clears the
            # obstacle when the ball outgrows it) overestimates; the plain
            # update caps the value so heap keys stay causal.
            u0, tau0, b0 = update_from_neighbors(
                u_h, u_h, has_h, u_v, u_v, has_v, 0.0, hk)
            if u0 < unew:
                unew = u0
                used = -1
        if unew < u[nb]:
            u[nb] = unew
            status[nb] = CONSIDERED
            fan_used[nb] = used
            heap_size = heap_insert(heap_nodes, heap_pos, heap_keys,
                                    heap_size, nb, unew)
    return heap_size, n_att


@njit(cache=True)
def solve_loop(nx, ny, h, ox, oy, speeds, u, status, fan_used,
               mode, corner_style, switch_idx, jit_radius, strict_monotone,
               fan_kind, fan_params, fan_cx, fan_cy, fan_radius, fan_box,
               fan_ax, fan_ay, fan_node, n_fans_init,
               cand_lookup, cand_qlo, cand_qhi, cand_full, cand_quadrant,
               cand_permeable, cand_fob, cand_obox,
               accepted_order, stats, aux):
    """March to completion; returns (accepted count, fan count).

    Seeds arrive in status/u: CONSIDERED nodes enter the heap as-is, and
    pre-accepted nodes (ball initialization) are relaxed in (u, index)
    order before the pop loop.  Dynamic fan entries are appended to the
    fan arrays in place.
    """
    n = nx * ny
    zero_params = np.zeros(PARAMS_WIDTH)
    heap_nodes = np.empty(n, np.int64)
    heap_pos = np.full(n, -1, np.int64)
    heap_keys = np.empty(n, np.float64)
    heap_size = 0
    n_fans = n_fans_init
    active_fan = 0
    for k in range(N_STATS):
        stats[k] = 0
    aux[AUX_MIN_DIP] = 0.0
    cand_done = np.zeros(cand_qlo.shape[0], np.uint8)

    # seed pass: queue pre-considered nodes, then relax pre-accepted ones
    # by increasing (u, index)
    n_seed = 0
    for idx in range(n):
        if status[idx] == CONSIDERED:
            heap_size = heap_insert(heap_nodes, heap_pos, heap_keys,
                                    heap_size, idx, u[idx])
        elif status[idx] == ACCEPTED:
            n_seed += 1
    if heap_size > stats[ST_HEAP_PEAK]:
        stats[ST_HEAP_PEAK] = heap_size
    seed_idx = np.empty(n_seed, np.int64)
    seed_u = np.empty(n_seed, np.float64)
    k = 0
    for idx in range(n):
        if status[idx] == ACCEPTED:
            seed_idx[k] = idx
            seed_u[k] = u[idx]
            k += 1
    order = np.argsort(seed_u, kind="mergesort")
    n_acc = 0
    for kk in range(n_seed):
        accepted_order[n_acc] = seed_idx[order[kk]]
        n_acc += 1
    for kk in range(n_seed):
        heap_size, n_att = _relax(
            seed_idx[order[kk]], nx, ny, h, ox, oy, speeds, u, status,
            fan_used, mode, active_fan, n_fans,
            fan_kind, fan_params, fan_cx, fan_cy, fan_radius, fan_box,
            zero_params, heap_nodes, heap_pos, heap_keys, heap_size)
        stats[ST_UPDATES] += n_att
        if heap_size > stats[ST_HEAP_PEAK]:
            stats[ST_HEAP_PEAK] = heap_size

    u_prev = -np.inf
    while heap_size > 0:
        idx, heap_size = heap_pop(heap_nodes, heap_pos, heap_keys, heap_size)
        val = u[idx]
        stats[ST_POPS] += 1
        dip = val - u_prev
        if dip < 0.0:
            if dip < aux[AUX_MIN_DIP]:
                aux[AUX_MIN_DIP] = dip
            if strict_monotone != 0 and \
                    dip < -MONOTONE_ABORT_TOL * (1.0 + abs(u_prev)):
                stats[ST_ERROR] = ERR_MONOTONE_POP
                break
        u_prev = val
        status[idx] = ACCEPTED
        accepted_order[n_acc] = idx
        n_acc += 1

        if mode == MODE_SWITCHING and idx == switch_idx:
            active_fan = 1

        if mode == MODE_JIT:
            c = cand_lookup[idx]
            if c >= 0 and cand_done[c] == 0:
                cand_done[c] = 1
                if cand_full[c] == 0:
                    i = idx // ny
                    j = idx % ny
                    # characteristic direction from accepted one-sided slopes
                    gx = 0.0
                    gy = 0.0
                    u_l = np.inf
                    u_r = np.inf
                    if i > 0 and status[idx - ny] == ACCEPTED:
                        u_l = u[idx - ny]
                    if i < nx - 1 and status[idx + ny] == ACCEPTED:
                        u_r = u[idx + ny]
                    if u_l < np.inf or u_r < np.inf:
                        if u_l <= u_r:
                            gx = (val - u_l) / h
                        else:
                            gx = -(val - u_r) / h
                    u_d = np.inf
                    u_u = np.inf
                    if j > 0 and status[idx - 1] == ACCEPTED:
                        u_d = u[idx - 1]
                    if j < ny - 1 and status[idx + 1] == ACCEPTED:
                        u_u = u[idx + 1]
                    if u_d < np.inf or u_u < np.inf:
                        if u_d <= u_u:
                            gy = (val - u_d) / h
                        else:
                            gy = -(val - u_u) / h
                    gn = math.hypot(gx, gy)
                    if gn == 0.0:
                        if val != 0.0:
                            stats[ST_ERROR] = ERR_CORNER_GRADIENT
                            break
                        # a source sitting on the corner: regular
                    else:
                        theta_na = math.atan2(gy, gx)  # direction of -a
                        lo = cand_qlo[c]
                        width = (cand_qhi[c] - lo) % TWO_PI
                        if (theta_na - lo) % TWO_PI > width:
                            # rarefying: append a fan
                            if n_fans >= fan_kind.shape[0]:
                                stats[ST_ERROR] = ERR_FAN_OVERFLOW
                                break
                            ax = -gx / gn
                            ay = -gy / gn
                            cx = ox + i * h
                            cy = oy + j * h
                            f_free = speeds[idx]
                            q = cand_quadrant[c]
                            built = False
                            kind = FK_CONE
                            row = fan_params[n_fans]
                            for kz in range(PARAMS_WIDTH):
                                row[kz] = 0.0
                            if corner_style == CORNER_CONE:
                                row[0] = cx
                                row[1] = cy
                                row[2] = f_free
                                kind = FK_CONE
                                built = True
                            elif cand_permeable[c] == 0:
                                kind = build_cone_plane(
                                    cx, cy, f_free, ax, ay,
                                    q * 0.5 * math.pi, (q + 1) * 0.5 * math.pi,
                                    row)
                                if corner_style == CORNER_SHADOW:
                                    kind = FK_CONE_SECTOR
                                built = True
                            else:
                                ups = f_free / cand_fob[c]
                                if ups <= 1.0:
                                    stats[ST_WARN_DEGENERATE] += 1
                                else:
                                    tax = _DIRS[q, 0]
                                    tay = _DIRS[q, 1]
                                    nax_ = _DIRS[(q + 3) % 4, 0]
                                    nay_ = _DIRS[(q + 3) % 4, 1]
                                    tbx = _DIRS[(q + 1) % 4, 0]
                                    tby = _DIRS[(q + 1) % 4, 1]
                                    nbx_ = _DIRS[(q + 2) % 4, 0]
                                    nby_ = _DIRS[(q + 2) % 4, 1]
                                    kind, ok = build_cone_two_planes(
                                        cx, cy, f_free, ax, ay,
                                        nax_, nay_, tax, tay,
                                        nbx_, nby_, tbx, tby, ups, row)
                                    if ok:
                                        built = True
                                    else:
                                        stats[ST_WARN_DEGENERATE] += 1
                            if built:
                                fan_kind[n_fans] = kind
                                fan_cx[n_fans] = cx
                                fan_cy[n_fans] = cy
                                fan_radius[n_fans] = jit_radius
                                fan_ax[n_fans] = ax
                                fan_ay[n_fans] = ay
                                fan_node[n_fans] = idx
                                for kz in range(4):
                                    fan_box[n_fans, kz] = cand_obox[c, kz]
                                n_fans += 1

        heap_size, n_att = _relax(
            idx, nx, ny, h, ox, oy, speeds, u, status, fan_used,
            mode, active_fan, n_fans,
            fan_kind, fan_params, fan_cx, fan_cy, fan_radius, fan_box,
            zero_params, heap_nodes, heap_pos, heap_keys, heap_size)
        stats[ST_UPDATES] += n_att
        if heap_size > stats[ST_HEAP_PEAK]:
            stats[ST_HEAP_PEAK] = heap_size

    for idx in range(n):
        st = status[idx]
        if st == FAR or st == CONSIDERED:
            stats[ST_UNREACHED] += 1
    return n_acc, n_fans
