"""Single-node upwind update, factored and plain.

The plain update is the factored one with a zero factor; both call the same
compiled kernel the marching loop uses, so a value computed here is the
value the solver would store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .kernels import BR_ONE_SIDED, BR_TWO_SIDED

INF = math.inf


@dataclass(frozen=True)
class NeighborData:
    """Upwind neighbor values along each axis, inf when absent.

    k_h/k_v give the chosen neighbor's offset sign: +1 means the neighbor
    at (i-1, j) resp. (i, j-1), matching a backward difference.
    """
    u_h: float = INF
    tau_h: float = 0.0
    k_h: int = 1
    u_v: float = INF
    tau_v: float = 0.0
    k_v: int = 1

    @property
    def has_h(self) -> bool:
        return math.isfinite(self.u_h)

    @property
    def has_v(self) -> bool:
        return math.isfinite(self.u_v)


@dataclass(frozen=True)
class UpdateResult:
    value: float
    tau: float
    branch: int


def select_neighbors(u_left, u_right, u_down, u_up,
                     tau_left=0.0, tau_right=0.0, tau_down=0.0, tau_up=0.0) -> NeighborData:
    """Pick the smaller accepted neighbor per axis; ties take k = +1."""
    if u_left <= u_right:
        u_h, tau_h, k_h = u_left, tau_left, 1
    else:
        u_h, tau_h, k_h = u_right, tau_right, -1
    if u_down <= u_up:
        u_v, tau_v, k_v = u_down, tau_down, 1
    else:
        u_v, tau_v, k_v = u_up, tau_up, -1
    return NeighborData(u_h, tau_h, k_h, u_v, tau_v, k_v)


def factored_update(nb: NeighborData, grad_t, t_node, h, f) -> UpdateResult:
    """Upwind update u = T + tau from one or two neighbors.

    grad_t is the factor gradient at the node being updated; T is its
    factor value there.  The discriminant test and the upwind check
    u >= max(neighbor u) both run on the compiled kernel.
    """
    if not (nb.has_h or nb.has_v):
        raise ValueError("update needs at least one finite neighbor")
    if f <= 0.0:
        raise ValueError("speed must be positive")
    h_over_f = h / f
    m_h = nb.tau_h - h * nb.k_h * grad_t[0] if nb.has_h else 0.0
    m_v = nb.tau_v - h * nb.k_v * grad_t[1] if nb.has_v else 0.0
    u, tau, branch = kernels.update_from_neighbors(
        m_h, nb.u_h, nb.has_h, m_v, nb.u_v, nb.has_v, t_node, h_over_f)
    return UpdateResult(u, tau, branch)


def unfactored_update(u_h, u_v, h, f) -> UpdateResult:
    """Plain first-order update; inf marks a missing neighbor."""
    nb = NeighborData(u_h=u_h, tau_h=u_h if math.isfinite(u_h) else 0.0,
                      u_v=u_v, tau_v=u_v if math.isfinite(u_v) else 0.0)
    return factored_update(nb, (0.0, 0.0), 0.0, h, f)
