"""Shared fixtures.

The compiled kernels are cached on disk, but the first in-process call
still pays a load/compile cost.  Timing-sensitive tests (and anything
comparing runtimes) must see warm kernels, so one session fixture touches
every entry point that Python code calls directly plus one full solve.
"""

import math

import pytest

from eikmarch.factors import ConePlane, build_corner_factor
from eikmarch.geometry import Grid2D, ObstacleWorld, RectObstacle
from eikmarch.heap import IndexedMinHeap
from eikmarch.solver import SolverConfig, fmm_solve
from eikmarch.speed import ConstantSpeed
from eikmarch.updates import unfactored_update


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    heap = IndexedMinHeap(4)
    heap.insert(0, 1.0)
    heap.insert(1, 0.5)
    heap.pop()

    unfactored_update(0.0, 0.0, 0.1, 1.0)

    fan = build_corner_factor((0.2, 0.2), (-math.sqrt(0.5), -math.sqrt(0.5)),
                              (0.5 * math.pi, math.pi), 1.0)
    assert isinstance(fan, ConePlane)
    fan.evaluate(0.3, 0.1)

    # one solve with an obstacle compiles the marching loop for every
    # method (they share a single kernel signature)
    g = Grid2D(9, 9, 0.125, (0.0, 0.0))
    world = ObstacleWorld(g, [RectObstacle((0.375, 0.375), (0.625, 0.625))])
    fmm_solve(g, world, ConstantSpeed(1.0), [(0.0, 0.0)],
              SolverConfig.just_in_time(fan_radius=0.3))
