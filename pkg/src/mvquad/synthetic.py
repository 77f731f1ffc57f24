"""Seeded motion fields whose exact-merge forests have a prescribed shape.

Used to reproduce published per-size block compositions when the source
frames are not available.
"""

from __future__ import annotations

import random

from .frames import GridGeometry
from .motion import DEFAULT_DMAX, MotionVector
from .quadtree import QuadForest, Split, Terminal, flatten

TABLE2_COUNTS = {16: 68, 32: 15, 64: 8}
TABLE3_COUNTS = {8: 412, 16: 89, 32: 12, 64: 1}


def _shape(geom: GridGeometry, counts: dict, rng: random.Random):
    """Random split pattern with ``counts[side]`` terminals of each side."""
    sides = []
    s = geom.max_block
    while s >= geom.min_block:
        sides.append(s)
        s //= 2
    if set(counts) - set(sides):
        raise ValueError(f"block sides {sorted(set(counts) - set(sides))} not in geometry")
    # nodes available at each level, top down; splits of one level feed the next
    available = geom.roots
    plan = {}
    for side in sides:
        terminal = counts.get(side, 0)
        if side == geom.min_block:
            if terminal != available:
                raise ValueError(f"composition needs {available} blocks of {side}, got {terminal}")
        elif terminal > available:
            raise ValueError(f"composition asks for {terminal} blocks of {side}, only {available} fit")
        flags = [True] * terminal + [False] * (available - terminal)
        rng.shuffle(flags)
        plan[side] = iter(flags)
        available = (available - terminal) * 4

    def node(side):
        if side == geom.min_block or next(plan[side]):
            return None
        return [node(side // 2) for _ in range(4)]

    return [node(geom.max_block) for _ in range(geom.roots)]


def forest_with_counts(geom: GridGeometry, counts: dict, seed: int = 0,
                       d_max: int = DEFAULT_DMAX) -> QuadForest:
    """Forest with the given terminal counts per block side.

    Terminal vectors are drawn without repetition from a shuffled cycle of
    all ``(2*d_max + 1)**2`` vectors, so four sibling terminals never share
    a vector and exact bottom-up grouping rebuilds the same forest.
    """
    rng = random.Random(seed)
    shapes = _shape(geom, counts, rng)
    pool = [MotionVector(dx, dy) for dy in range(-d_max, d_max + 1) for dx in range(-d_max, d_max + 1)]
    if len(pool) < 4:
        raise ValueError("d_max too small to keep siblings distinct")
    rng.shuffle(pool)
    i = 0

    def fill(s):
        nonlocal i
        if s is None:
            v = pool[i % len(pool)]
            i += 1
            return Terminal(v)
        return Split(tuple(fill(c) for c in s))

    return QuadForest(geom, [fill(s) for s in shapes], d_max)


def field_with_counts(geom: GridGeometry, counts: dict, seed: int = 0, d_max: int = DEFAULT_DMAX):
    return flatten(forest_with_counts(geom, counts, seed, d_max))


def table2_field(seed: int = 0):
    return field_with_counts(GridGeometry(256, 256, 16, 64), TABLE2_COUNTS, seed)


def table3_field(seed: int = 0):
    return field_with_counts(GridGeometry(256, 256, 8, 64), TABLE3_COUNTS, seed)
