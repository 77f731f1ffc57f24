"""Joint coding of block shape and inter/intraframe predictor choice.

The modified tree reuses the interframe traversal. Nodes above
``min_block`` emit ``1`` for a split, ``00`` for a terminal inter node and
``01`` for a terminal intra node; ``min_block`` nodes emit a single kind
bit (``0`` inter, ``1`` intra). Inter terminals then carry 4+4 bit
vectors in traversal order.

With the flag enabled, a leading ``1`` announces the tree. A leading ``0``
announces the flat fallback used for fully split forests: one kind bit per
base block in row-major order, then the inter vectors in that order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .bitio import BitReader, BitWriter, StreamError
from .frames import Frame, GeometryError, GridGeometry, validate_geometry
from .motion import DEFAULT_DMAX, MotionField, MotionVector, block_mad
from .quadtree import (
    EXACT, Bitstream, CostReport, MergePolicy, Split, _quads, count_by_size,
    full_split, read_vector, try_merge, walk_node, write_vector,
)


class PredictorKind(enum.Enum):
    INTER = "inter"
    INTRA = "intra"


INTER, INTRA = PredictorKind.INTER, PredictorKind.INTRA

# the smallest representable penalty strictly above 1
_MIN_PENALTY = math.nextafter(1.0, math.inf)


class Decision(NamedTuple):
    kind: PredictorKind
    vector: Optional[MotionVector] = None
    inter_error: float = 0.0
    intra_error: float = 0.0


@dataclass(frozen=True)
class PenaltyPolicy:
    base_P: float = 1.2
    adaptive: bool = False
    neighbor_bias: float = 1.25

    def __post_init__(self):
        if not self.base_P > 1:
            raise ValueError(f"penalty must exceed 1, got {self.base_P}")
        if self.neighbor_bias < 1:
            raise ValueError("neighbor_bias must be at least 1")


@dataclass(frozen=True)
class InterTerminal:
    vector: MotionVector

    kind = INTER


@dataclass(frozen=True)
class IntraTerminal:
    kind = INTRA


@dataclass(frozen=True)
class MixedForest:
    geom: GridGeometry
    roots: tuple
    d_max: int = DEFAULT_DMAX

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        if len(self.roots) != self.geom.roots:
            raise GeometryError(f"expected {self.geom.roots} roots, got {len(self.roots)}")

    def walk(self):
        for root in self.roots:
            yield from walk_node(root, self.geom.max_block)

    def is_fully_split(self) -> bool:
        return all(isinstance(n, Split) or side == self.geom.min_block for n, side in self.walk())


def intra_error_dc(target: Frame, origin, size: int) -> float:
    """MAD of a block against its own mean, the mean rounded half up."""
    x, y = origin
    if x < 0 or y < 0 or x + size > target.width or y + size > target.height:
        raise IndexError(f"block at {origin} (size {size}) out of bounds")
    block = target.pixels[y:y + size, x:x + size].astype(np.int64)
    n = size * size
    dc = (2 * int(block.sum()) + n) // (2 * n)
    return int(np.abs(block - dc).sum()) / n


def decide_block(inter_error: float, intra_error: float, P: float) -> PredictorKind:
    """Inter iff ``inter_error < P * intra_error``; ties go to intra."""
    if not P > 1:
        raise ValueError(f"penalty must exceed 1, got {P}")
    return INTER if inter_error < P * intra_error else INTRA


def effective_penalty(policy: PenaltyPolicy, decided_siblings) -> float:
    kinds = set(decided_siblings)
    if not policy.adaptive or not kinds or len(kinds) > 1:
        return policy.base_P
    if kinds == {INTER}:
        return policy.base_P * policy.neighbor_bias
    return max(policy.base_P / policy.neighbor_bias, _MIN_PENALTY)


IntraErrorFn = Callable[[Frame, tuple, int], float]


def decide_field(field: MotionField, reference: Frame, target: Frame,
                 policy: PenaltyPolicy = PenaltyPolicy(),
                 intra_error: IntraErrorFn = intra_error_dc) -> list[list[Decision]]:
    """Per base block decisions, row-major.

    Inside each aligned 2x2 group the blocks are decided in TL, TR, BL, BR
    order so the adaptive penalty can see the siblings decided before.
    """
    g = field.geom
    validate_geometry(reference, g)
    validate_geometry(target, g)
    s = g.min_block
    out: list[list[Optional[Decision]]] = [[None] * g.cols for _ in range(g.rows)]
    group = 2 if g.rows % 2 == 0 and g.cols % 2 == 0 else 1
    for gr in range(0, g.rows, group):
        for gc in range(0, g.cols, group):
            decided: list[PredictorKind] = []
            for r in range(gr, gr + group):
                for c in range(gc, gc + group):
                    v = field[r, c]
                    origin = (c * s, r * s)
                    e_inter = block_mad(reference, target, origin, s, v)
                    e_intra = intra_error(target, origin, s)
                    kind = decide_block(e_inter, e_intra, effective_penalty(policy, decided))
                    decided.append(kind)
                    out[r][c] = Decision(kind, v if kind is INTER else None, e_inter, e_intra)
    return out


def build_mixed_from_decisions(decisions, geom: GridGeometry, merge: MergePolicy = EXACT,
                               d_max: int = DEFAULT_DMAX) -> MixedForest:
    """Bottom-up grouping; four siblings merge only when they share a predictor
    and, for inter, pass the vector merge policy."""
    if len(decisions) != geom.rows or any(len(row) != geom.cols for row in decisions):
        raise GeometryError("decision grid does not match geometry")

    def leaf(d):
        return InterTerminal(MotionVector(*d.vector)) if d.kind is INTER else IntraTerminal()

    grid = [[leaf(d) for d in row] for row in decisions]
    bounds = [[((n.vector.dx, n.vector.dy),) * 2 if isinstance(n, InterTerminal) else None
               for n in row] for row in grid]
    for _ in range(geom.levels - 1):
        nq, bq = _quads(grid), _quads(bounds)
        grid, bounds = [], []
        for nrow, brow in zip(nq, bq):
            grow, bnew = [], []
            for kids, kb in zip(nrow, brow):
                merged = None
                if all(isinstance(k, IntraTerminal) for k in kids):
                    merged = IntraTerminal()
                elif all(isinstance(k, InterTerminal) for k in kids):
                    lo = (min(b[0][0] for b in kb), min(b[0][1] for b in kb))
                    hi = (max(b[1][0] for b in kb), max(b[1][1] for b in kb))
                    rep = try_merge([k.vector for k in kids], merge, d_max, (lo, hi))
                    if rep is not None:
                        merged = InterTerminal(rep)
                live = [b for b in kb if b is not None]
                box = None
                if live:
                    box = ((min(b[0][0] for b in live), min(b[0][1] for b in live)),
                           (max(b[1][0] for b in live), max(b[1][1] for b in live)))
                grow.append(merged if merged is not None else Split(kids))
                bnew.append(box)
            grid.append(grow)
            bounds.append(bnew)
    return MixedForest(geom, [n for row in grid for n in row], d_max)


def build_mixed(field: MotionField, reference: Frame, target: Frame,
                geom: GridGeometry | None = None, policy: PenaltyPolicy = PenaltyPolicy(),
                merge: MergePolicy = EXACT,
                intra_error: IntraErrorFn = intra_error_dc) -> MixedForest:
    geom = geom or field.geom
    if (geom.width, geom.height, geom.min_block) != (field.geom.width, field.geom.height, field.geom.min_block):
        raise GeometryError("field does not match geometry")
    decisions = decide_field(field, reference, target, policy, intra_error)
    return build_mixed_from_decisions(decisions, geom, merge, field.d_max)


def flatten_decisions(forest: MixedForest) -> list[list[Decision]]:
    """Kind (and vector for inter) of every base block, row-major."""
    g = forest.geom
    kinds = np.zeros((g.rows, g.cols), dtype=np.int8)
    vecs = np.zeros((g.rows, g.cols, 2), dtype=np.int16)
    k = g.leaves_per_root

    def paint(node, r0, c0, n):
        if isinstance(node, Split):
            h = n // 2
            for child, (dr, dc) in zip(node.children, ((0, 0), (0, h), (h, 0), (h, h))):
                paint(child, r0 + dr, c0 + dc, h)
        elif isinstance(node, InterTerminal):
            vecs[r0:r0 + n, c0:c0 + n] = tuple(node.vector)
        else:
            kinds[r0:r0 + n, c0:c0 + n] = 1

    for i, root in enumerate(forest.roots):
        rr, rc = divmod(i, g.root_cols)
        paint(root, rr * k, rc * k, k)
    return [[Decision(INTRA) if kinds[r, c] else
             Decision(INTER, MotionVector(int(vecs[r, c, 0]), int(vecs[r, c, 1])))
             for c in range(g.cols)] for r in range(g.rows)]


def _unmerged(decisions, geom, d_max) -> MixedForest:
    leaves = [[InterTerminal(d.vector) if d.kind is INTER else IntraTerminal() for d in row]
              for row in decisions]
    for _ in range(geom.levels - 1):
        leaves = [[Split(q) for q in row] for row in _quads(leaves)]
    return MixedForest(geom, [n for row in leaves for n in row], d_max)


def _write_mixed_tree(w: BitWriter, node, side, min_block, inter: list):
    if side > min_block:
        if isinstance(node, Split):
            w.write_bit(1)
            for child in node.children:
                _write_mixed_tree(w, child, side // 2, min_block, inter)
            return
        w.write_bit(0)
    elif isinstance(node, Split):
        raise ValueError("split node at the minimum block size")
    w.write_bit(isinstance(node, IntraTerminal))
    if isinstance(node, InterTerminal):
        inter.append(node.vector)


def encode_mixed(forest: MixedForest, with_flag: bool = False):
    g = forest.geom
    w = BitWriter()
    inter: list = []
    if with_flag and forest.is_fully_split():
        w.write_bit(0)
        for row in flatten_decisions(forest):
            for d in row:
                w.write_bit(d.kind is INTRA)
                if d.kind is INTER:
                    inter.append(d.vector)
    else:
        if with_flag:
            w.write_bit(1)
        for root in forest.roots:
            _write_mixed_tree(w, root, g.max_block, g.min_block, inter)
    tree_bits = len(w) - int(with_flag)
    for v in inter:
        write_vector(w, v)
    return Bitstream(w.getvalue(), len(w), tree_bits, int(with_flag))


def decode_mixed(bits, geom: GridGeometry, with_flag: bool = False,
                 d_max: int = DEFAULT_DMAX) -> MixedForest:
    r = BitReader(bytes(bits))

    def vector():
        v = read_vector(r)
        if max(abs(v.dx), abs(v.dy)) > d_max:
            raise StreamError(f"decoded vector {tuple(v)} exceeds d_max={d_max}")
        return v

    if with_flag and not r.read_bit():
        kinds = [[INTRA if r.read_bit() else INTER for _ in range(geom.cols)]
                 for _ in range(geom.rows)]
        decisions = [[Decision(k, vector() if k is INTER else None) for k in row] for row in kinds]
        r.finish()
        return _unmerged(decisions, geom, d_max)

    def shape(side):
        if side > geom.min_block and r.read_bit():
            return Split(tuple(shape(side // 2) for _ in range(4)))
        return INTRA if r.read_bit() else INTER

    def fill(node):
        if isinstance(node, Split):
            return Split(tuple(fill(c) for c in node.children))
        return InterTerminal(vector()) if node is INTER else IntraTerminal()

    shapes = [shape(geom.max_block) for _ in range(geom.roots)]
    roots = [fill(s) for s in shapes]
    r.finish()
    return MixedForest(geom, roots, d_max)


@dataclass(frozen=True)
class MixedCostReport(CostReport):
    """Cost of a mixed stream; the ratio compares decision overhead
    (flag + tree bits) against one uncoded decision bit per base block."""

    inter_terminals: int = 0
    intra_terminals: int = 0

    @property
    def decision_bits(self) -> int:
        return self.flag_bits + self.tree_bits

    @property
    def baseline_bits(self) -> int:
        return self.base_blocks

    @property
    def ratio_percent(self) -> float:
        return 100.0 * self.decision_bits / self.baseline_bits


def mixed_cost_report(forest: MixedForest, with_flag: bool = False) -> MixedCostReport:
    g = forest.geom
    nodes = list(forest.walk())
    counts = count_by_size(nodes)
    n_inter = sum(1 for n, _ in nodes if isinstance(n, InterTerminal))
    n_intra = sum(1 for n, _ in nodes if isinstance(n, IntraTerminal))
    if with_flag and forest.is_fully_split():
        tree_bits = g.base_blocks
    else:
        tree_bits = sum(1 if isinstance(n, Split) else (2 if side > g.min_block else 1)
                        for n, side in nodes)
    flag = int(with_flag)
    total = -(-(flag + tree_bits + 8 * n_inter) // 8)
    return MixedCostReport(counts, tree_bits, n_inter, flag, total, g.base_blocks,
                           g.base_blocks, g.min_block, n_inter, n_intra)


def mixed_theoretical_bounds(geom: GridGeometry, with_flag: bool = False):
    """Decision-overhead cost of all-inter roots (best) and a fully split tree (worst)."""
    leaf = InterTerminal(MotionVector(0, 0))
    best = MixedForest(geom, [leaf] * geom.roots)
    worst = MixedForest(geom, [full_split(geom.max_block, geom.min_block, leaf)] * geom.roots)
    return mixed_cost_report(best, with_flag), mixed_cost_report(worst, with_flag)


def write_decisions(decisions, geom: GridGeometry, path, d_max: int = DEFAULT_DMAX) -> None:
    lines = [f"mixfield {geom.width} {geom.height} {geom.min_block} {d_max}"]
    for row in decisions:
        for d in row:
            lines.append(f"inter {d.vector.dx} {d.vector.dy}" if d.kind is INTER else "intra")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_decisions(path, max_block: int = 64):
    """Parse a decision file; returns ``(decisions, geom, d_max)``."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or lines[0][0] != "mixfield" or len(lines[0]) != 5:
        raise ValueError(f"{path}: missing 'mixfield' header")
    width, height, min_block, d_max = (int(t) for t in lines[0][1:])
    geom = GridGeometry(width, height, min_block, max(max_block, min_block))
    body = lines[1:]
    if len(body) != geom.base_blocks:
        raise ValueError(f"{path}: expected {geom.base_blocks} decisions, found {len(body)}")
    flat = []
    for toks in body:
        if toks == ["intra"]:
            flat.append(Decision(INTRA))
        elif len(toks) == 3 and toks[0] == "inter":
            v = MotionVector(int(toks[1]), int(toks[2]))
            if max(abs(v.dx), abs(v.dy)) > d_max:
                raise ValueError(f"{path}: vector {tuple(v)} exceeds d_max={d_max}")
            flat.append(Decision(INTER, v))
        else:
            raise ValueError(f"{path}: malformed decision line {' '.join(toks)!r}")
    decisions = [flat[r * geom.cols:(r + 1) * geom.cols] for r in range(geom.rows)]
    return decisions, geom, d_max
