"""Indexed binary min-heap with decrease-key, for the marching loop.

Keys are (value, node index) pairs compared lexicographically, which makes
tie handling deterministic.  The njit functions operate on preallocated
flat arrays so the solver core can use them; IndexedMinHeap wraps them for
ordinary Python callers and tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _less(keys, a, b):
    ka = keys[a]
    kb = keys[b]
    if ka < kb:
        return True
    if ka > kb:
        return False
    return a < b


@njit(cache=True)
def _sift_up(nodes, pos, keys, i):
    v = nodes[i]
    while i > 0:
        p = (i - 1) >> 1
        w = nodes[p]
        if _less(keys, v, w):
            nodes[i] = w
            pos[w] = i
            i = p
        else:
            break
    nodes[i] = v
    pos[v] = i


@njit(cache=True)
def _sift_down(nodes, pos, keys, size, i):
    v = nodes[i]
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and _less(keys, nodes[c + 1], nodes[c]):
            c += 1
        w = nodes[c]
        if _less(keys, w, v):
            nodes[i] = w
            pos[w] = i
            i = c
        else:
            break
    nodes[i] = v
    pos[v] = i


@njit(cache=True)
def heap_insert(nodes, pos, keys, size, v, key):
    """Insert node v, or decrease its key if already present.

    Key increases are ignored (the marching loop only ever improves
    values).  Returns the new heap size.
    """
    if pos[v] >= 0:
        if key < keys[v]:
            keys[v] = key
            _sift_up(nodes, pos, keys, pos[v])
        return size
    keys[v] = key
    nodes[size] = v
    pos[v] = size
    _sift_up(nodes, pos, keys, size)
    return size + 1


@njit(cache=True)
def heap_pop(nodes, pos, keys, size):
    """Remove and return the minimum node.  Returns (node, new size)."""
    v = nodes[0]
    pos[v] = -1
    size -= 1
    if size > 0:
        w = nodes[size]
        nodes[0] = w
        pos[w] = 0
        _sift_down(nodes, pos, keys, size, 0)
    return v, size


class IndexedMinHeap:
    """Python-facing wrapper over the array heap, capacity n node slots."""

    def __init__(self, n: int):
        self.nodes = np.empty(n, dtype=np.int64)
        self.pos = np.full(n, -1, dtype=np.int64)
        self.keys = np.empty(n, dtype=np.float64)
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def __contains__(self, v: int) -> bool:
        return self.pos[v] >= 0

    def insert(self, v: int, key: float) -> None:
        self.size = heap_insert(self.nodes, self.pos, self.keys, self.size, v, key)

    def pop(self) -> tuple[int, float]:
        if self.size == 0:
            raise IndexError("pop from empty heap")
        v, self.size = heap_pop(self.nodes, self.pos, self.keys, self.size)
        return int(v), float(self.keys[v])

    def key_of(self, v: int) -> float:
        if self.pos[v] < 0:
            raise KeyError(v)
        return float(self.keys[v])
