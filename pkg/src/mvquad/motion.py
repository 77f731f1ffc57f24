"""Block-matching motion estimation under the mean absolute difference criterion.

Blocks are laid on the reference frame; a vector ``v`` says where the
reference block is written in the target frame, so the matching error of
a block at ``p`` is computed against ``target[p + v]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .frames import Frame, GeometryError, GridGeometry, validate_geometry

DEFAULT_DMAX = 7


class MotionVector(NamedTuple):
    dx: int
    dy: int


ZERO = MotionVector(0, 0)


class SearchParams(NamedTuple):
    d_max: int = DEFAULT_DMAX
    mode: str = "conjugate_direction"
    max_refinement_passes: int = 2

    def check(self):
        if self.d_max < 0:
            raise ValueError("d_max must be nonnegative")
        if self.max_refinement_passes < 1:
            raise ValueError("max_refinement_passes must be at least 1")
        if self.mode not in ("conjugate_direction", "full_search"):
            raise ValueError(f"unknown search mode {self.mode!r}")


@dataclass(frozen=True, eq=False)
class MotionField:
    """One vector per ``min_block`` base block, stored as ``(rows, cols, 2)``."""

    geom: GridGeometry
    vectors: np.ndarray
    d_max: int = DEFAULT_DMAX

    def __post_init__(self):
        arr = np.array(self.vectors, dtype=np.int16)
        expect = (self.geom.rows, self.geom.cols, 2)
        if arr.shape != expect:
            raise GeometryError(f"field shape {arr.shape} does not match geometry {expect}")
        if arr.size and int(np.abs(arr).max()) > self.d_max:
            raise ValueError(f"vector component exceeds d_max={self.d_max}")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @classmethod
    def uniform(cls, geom: GridGeometry, v=ZERO, d_max: int = DEFAULT_DMAX) -> "MotionField":
        arr = np.empty((geom.rows, geom.cols, 2), dtype=np.int16)
        arr[...] = tuple(v)
        return cls(geom, arr, d_max)

    def __getitem__(self, rc) -> MotionVector:
        r, c = rc
        dx, dy = self.vectors[r, c]
        return MotionVector(int(dx), int(dy))

    def __iter__(self):
        for r in range(self.geom.rows):
            for c in range(self.geom.cols):
                yield self[r, c]

    def __len__(self):
        return self.geom.base_blocks

    def __eq__(self, other):
        if not isinstance(other, MotionField):
            return NotImplemented
        return self.geom == other.geom and bool(np.array_equal(self.vectors, other.vectors))

    def __repr__(self):
        return f"MotionField({self.geom.width}x{self.geom.height}/{self.geom.min_block}, d_max={self.d_max})"


def _inside(frame: Frame, x: int, y: int, size: int) -> bool:
    return 0 <= x and 0 <= y and x + size <= frame.width and y + size <= frame.height


def block_sad(reference: Frame, target: Frame, origin, size: int, v) -> int:
    x, y = origin
    dx, dy = v
    if not _inside(reference, x, y, size):
        raise IndexError(f"source block at {origin} (size {size}) out of bounds")
    if not _inside(target, x + dx, y + dy, size):
        raise IndexError(f"displaced block at {(x + dx, y + dy)} out of bounds")
    src = reference.pixels[y:y + size, x:x + size].astype(np.int32)
    dst = target.pixels[y + dy:y + dy + size, x + dx:x + dx + size].astype(np.int32)
    return int(np.abs(dst - src).sum())


def block_mad(reference: Frame, target: Frame, origin, size: int, v) -> float:
    """Mean absolute difference between the reference block at ``origin``
    and the target block displaced by ``v``."""
    return block_sad(reference, target, origin, size, v) / (size * size)


def _sad_surface(reference, target, origin, size, d_max):
    """SAD for every in-bounds candidate.

    Returns ``(sad, dxs, dys)`` where ``sad[j, i]`` belongs to ``(dxs[i], dys[j])``.
    """
    x, y = origin
    if not _inside(reference, x, y, size):
        raise IndexError(f"source block at {origin} (size {size}) out of bounds")
    dx_lo = max(-d_max, -x)
    dx_hi = min(d_max, target.width - size - x)
    dy_lo = max(-d_max, -y)
    dy_hi = min(d_max, target.height - size - y)
    if dx_lo > dx_hi or dy_lo > dy_hi:
        raise IndexError("no in-bounds candidate displacement")
    region = target.pixels[y + dy_lo:y + dy_hi + size, x + dx_lo:x + dx_hi + size].astype(np.int32)
    windows = sliding_window_view(region, (size, size))
    src = reference.pixels[y:y + size, x:x + size].astype(np.int32)
    sad = np.abs(windows - src).sum(axis=(2, 3))
    return sad, np.arange(dx_lo, dx_hi + 1), np.arange(dy_lo, dy_hi + 1)


def full_search(reference: Frame, target: Frame, origin, size: int,
                params: SearchParams = SearchParams()) -> tuple[MotionVector, float]:
    """Exhaustive search over the ``(2*d_max + 1)**2`` window.

    Ties go to the smaller ``|dx| + |dy|``, then smaller ``dy``, then smaller ``dx``.
    """
    sad, dxs, dys = _sad_surface(reference, target, origin, size, params.d_max)
    gx, gy = np.meshgrid(dxs, dys)
    order = np.lexsort((gx.ravel(), gy.ravel(), (np.abs(gx) + np.abs(gy)).ravel(), sad.ravel()))
    k = order[0]
    v = MotionVector(int(gx.ravel()[k]), int(gy.ravel()[k]))
    return v, int(sad.ravel()[k]) / (size * size)


def conjugate_direction_search(reference: Frame, target: Frame, origin, size: int,
                               params: SearchParams = SearchParams()) -> tuple[MotionVector, float]:
    """One-axis-at-a-time descent starting from the zero vector.

    Each pass walks along dx in unit steps while the error strictly drops,
    then along dy; passes repeat until one makes no move or the pass budget
    is spent.
    """
    x, y = origin
    d_max = params.d_max
    cache: dict[tuple[int, int], int] = {}

    def cost(dx, dy):
        if abs(dx) > d_max or abs(dy) > d_max or not _inside(target, x + dx, y + dy, size):
            return None
        key = (dx, dy)
        if key not in cache:
            cache[key] = block_sad(reference, target, origin, size, key)
        return cache[key]

    if not _inside(reference, x, y, size):
        raise IndexError(f"source block at {origin} (size {size}) out of bounds")
    pos = [0, 0]
    best = cost(0, 0)
    if best is None:
        raise IndexError("zero displacement is out of bounds")

    def descend(axis):
        nonlocal best
        moved = False
        step, cand = 0, best
        for s in (1, -1):
            probe = list(pos)
            probe[axis] += s
            c = cost(*probe)
            if c is not None and c < cand:
                step, cand = s, c
        while step:
            pos[axis] += step
            best = cand
            moved = True
            probe = list(pos)
            probe[axis] += step
            c = cost(*probe)
            if c is None or c >= best:
                break
            cand = c
        return moved

    for _ in range(params.max_refinement_passes):
        moved_x = descend(0)
        moved_y = descend(1)
        if not (moved_x or moved_y):
            break
    return MotionVector(pos[0], pos[1]), best / (size * size)


_SEARCHES = {
    "conjugate_direction": conjugate_direction_search,
    "full_search": full_search,
}


def estimate_field(reference: Frame, target: Frame, geom: GridGeometry,
                   params: SearchParams = SearchParams()) -> MotionField:
    """Estimate one vector per base block of ``reference``."""
    params.check()
    validate_geometry(reference, geom)
    validate_geometry(target, geom)
    search = _SEARCHES[params.mode]
    size = geom.min_block
    out = np.zeros((geom.rows, geom.cols, 2), dtype=np.int16)
    for r in range(geom.rows):
        for c in range(geom.cols):
            v, _ = search(reference, target, (c * size, r * size), size, params)
            out[r, c] = v
    return MotionField(geom, out, params.d_max)


def write_field(field: MotionField, path) -> None:
    g = field.geom
    lines = [f"mvfield {g.width} {g.height} {g.min_block} {field.d_max}"]
    lines += [f"{v.dx} {v.dy}" for v in field]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path, max_block: int = 64) -> MotionField:
    """Parse the line-based field format. ``max_block`` is not stored in the file."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or lines[0][0] != "mvfield" or len(lines[0]) != 5:
        raise ValueError(f"{path}: missing 'mvfield' header")
    width, height, min_block, d_max = (int(t) for t in lines[0][1:])
    geom = GridGeometry(width, height, min_block, max(max_block, min_block))
    body = lines[1:]
    if len(body) != geom.base_blocks:
        raise ValueError(f"{path}: expected {geom.base_blocks} vectors, found {len(body)}")
    try:
        arr = np.array([[int(a), int(b)] for a, b in body], dtype=np.int16)
    except ValueError:
        raise ValueError(f"{path}: malformed vector line") from None
    return MotionField(geom, arr.reshape(geom.rows, geom.cols, 2), d_max)
