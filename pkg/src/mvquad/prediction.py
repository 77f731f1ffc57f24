"""Forward ("writing") prediction of a frame from a reference and a motion field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Frame, GeometryError
from .motion import MotionField


@dataclass(frozen=True, eq=False)
class Prediction:
    predicted: Frame
    coverage: np.ndarray
    overlap_count: int
    hole_count: int


def write_prediction(reference: Frame, field: MotionField) -> Prediction:
    """Write every reference block at its displaced address.

    Blocks are written in row-major order, so a later block overwrites an
    earlier one where they collide. Pixels landing outside the frame are
    dropped. ``overlap_count`` counts pixel writes onto already written
    positions.
    """
    g = field.geom
    if (reference.width, reference.height) != (g.width, g.height):
        raise GeometryError("field geometry does not match the reference frame")
    h, w = g.height, g.width
    out = np.zeros((h, w), dtype=np.uint8)
    hits = np.zeros((h, w), dtype=np.int32)
    src = reference.pixels
    s = g.min_block
    for r in range(g.rows):
        for c in range(g.cols):
            dx, dy = (int(t) for t in field.vectors[r, c])
            x0, y0 = c * s + dx, r * s + dy
            # clip the destination rectangle and the matching source window
            cx0, cy0 = max(x0, 0), max(y0, 0)
            cx1, cy1 = min(x0 + s, w), min(y0 + s, h)
            if cx0 >= cx1 or cy0 >= cy1:
                continue
            out[cy0:cy1, cx0:cx1] = src[cy0 - dy:cy1 - dy, cx0 - dx:cx1 - dx]
            hits[cy0:cy1, cx0:cx1] += 1
    coverage = hits > 0
    coverage.setflags(write=False)
    overlap = int(np.maximum(hits - 1, 0).sum())
    holes = int((~coverage).sum())
    return Prediction(Frame(out, reference.index), coverage, overlap, holes)


def fill_holes(pred: Prediction, reference: Frame) -> Frame:
    """Uncovered pixels take the co-located reference pixel."""
    if pred.predicted.pixels.shape != reference.pixels.shape:
        raise GeometryError("prediction and reference differ in size")
    return Frame(np.where(pred.coverage, pred.predicted.pixels, reference.pixels), pred.predicted.index)


def frame_mad(a: Frame, b: Frame) -> float:
    if a.pixels.shape != b.pixels.shape:
        raise GeometryError(f"cannot compare {a!r} with {b!r}")
    diff = np.abs(a.pixels.astype(np.int32) - b.pixels.astype(np.int32))
    return int(diff.sum()) / diff.size


def reconstruct(reference: Frame, field: MotionField) -> tuple[Frame, Prediction]:
    pred = write_prediction(reference, field)
    return fill_holes(pred, reference), pred
