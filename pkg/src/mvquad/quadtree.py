"""Variable-block-size quadtree coding of motion fields.

Bit layout of an interframe stream (all MSB-first, zero-padded to a byte):

* optional flag bit, ``1`` = quadtree coding in use;
* tree section: roots in row-major order, each traversed depth-first in
  TL, TR, BL, BR order. A node larger than ``min_block`` emits ``1`` for a
  split and ``0`` for a terminal; ``min_block`` nodes emit nothing since
  they can only be terminal;
* vector section: for each terminal, in the same order, ``dx`` then ``dy``
  as 4-bit two's complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterator, Union

import numpy as np

from .bitio import BitReader, BitWriter, StreamError
from .frames import GeometryError, GridGeometry
from .motion import DEFAULT_DMAX, MotionField, MotionVector

VECTOR_BITS = 4


@dataclass(frozen=True)
class Terminal:
    vector: MotionVector


@dataclass(frozen=True)
class Split:
    children: tuple  # TL, TR, BL, BR

    def __post_init__(self):
        if len(self.children) != 4:
            raise ValueError("a split node has exactly four children")


QuadNode = Union[Terminal, Split]


@dataclass(frozen=True)
class QuadForest:
    geom: GridGeometry
    roots: tuple
    d_max: int = DEFAULT_DMAX

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        if len(self.roots) != self.geom.roots:
            raise GeometryError(f"expected {self.geom.roots} roots, got {len(self.roots)}")

    def walk(self) -> Iterator[tuple[object, int]]:
        """Yield ``(node, side)`` in stream order."""
        for root in self.roots:
            yield from walk_node(root, self.geom.max_block)

    def terminals(self) -> list:
        return [n for n, _ in self.walk() if not isinstance(n, Split)]


def walk_node(node, side: int):
    yield node, side
    if isinstance(node, Split):
        for child in node.children:
            yield from walk_node(child, side // 2)


@dataclass(frozen=True)
class MergePolicy:
    """When four sibling vectors may be grouped.

    ``threshold`` is the largest allowed Chebyshev distance between any two
    sibling representatives (0 = identical vectors only). With ``strict``
    the test runs over all original base-block vectors under the merged
    region instead of the current-level representatives.
    """

    threshold: int = 0
    strict: bool = False

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("merge threshold must be nonnegative")

    @property
    def kind(self) -> str:
        return "exact" if self.threshold == 0 else "relaxed"

    @classmethod
    def exact(cls) -> "MergePolicy":
        return cls(0)

    @classmethod
    def relaxed(cls, threshold: int, strict: bool = False) -> "MergePolicy":
        return cls(threshold, strict)


EXACT = MergePolicy()


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // b
    return q if a >= 0 else -q


def merge_representative(vectors, d_max: int = DEFAULT_DMAX) -> MotionVector:
    """Component-wise mean rounded toward zero, clamped to ``[-d_max, d_max]``."""
    n = len(vectors)
    dx = _trunc_div(sum(v[0] for v in vectors), n)
    dy = _trunc_div(sum(v[1] for v in vectors), n)
    return MotionVector(max(-d_max, min(d_max, dx)), max(-d_max, min(d_max, dy)))


def _span_ok(lo, hi, threshold):
    return hi[0] - lo[0] <= threshold and hi[1] - lo[1] <= threshold


def try_merge(vectors, policy: MergePolicy, d_max: int, leaf_bounds=None):
    """Representative of ``vectors`` if the policy groups them, else ``None``.

    ``leaf_bounds`` is the (min, max) component box of the original leaves,
    consulted only by the strict variant.
    """
    if policy.threshold == 0:
        first = vectors[0]
        return first if all(v == first for v in vectors) else None
    if policy.strict and leaf_bounds is not None:
        lo, hi = leaf_bounds
    else:
        lo = (min(v[0] for v in vectors), min(v[1] for v in vectors))
        hi = (max(v[0] for v in vectors), max(v[1] for v in vectors))
    if not _span_ok(lo, hi, policy.threshold):
        return None
    return merge_representative(vectors, d_max)


def _check_geom(field: MotionField, geom: GridGeometry | None) -> GridGeometry:
    if geom is None:
        return field.geom
    if (geom.width, geom.height, geom.min_block) != (field.geom.width, field.geom.height, field.geom.min_block):
        raise GeometryError("field does not match geometry")
    return geom


def _quads(grid):
    """Regroup a 2-D list of nodes into a half-size grid of TL, TR, BL, BR tuples."""
    rows, cols = len(grid), len(grid[0])
    return [[(grid[r][c], grid[r][c + 1], grid[r + 1][c], grid[r + 1][c + 1])
             for c in range(0, cols, 2)] for r in range(0, rows, 2)]


def build_levels(field: MotionField, geom: GridGeometry, policy: MergePolicy = EXACT) -> list:
    """Bottom-up node grids, one per level, index 0 at ``min_block``.

    Each grid entry is the subtree covering that cell.
    """
    d_max = field.d_max
    grid = [[Terminal(field[r, c]) for c in range(geom.cols)] for r in range(geom.rows)]
    bounds = [[((v.dx, v.dy), (v.dx, v.dy)) for v in (n.vector for n in row)] for row in grid]
    levels = [grid]
    for _ in range(geom.levels - 1):
        node_q, bound_q = _quads(grid), _quads(bounds)
        grid, bounds = [], []
        for nrow, brow in zip(node_q, bound_q):
            grow, bnew = [], []
            for kids, kb in zip(nrow, brow):
                lo = (min(b[0][0] for b in kb), min(b[0][1] for b in kb))
                hi = (max(b[1][0] for b in kb), max(b[1][1] for b in kb))
                rep = None
                if all(isinstance(k, Terminal) for k in kids):
                    rep = try_merge([k.vector for k in kids], policy, d_max, (lo, hi))
                grow.append(Terminal(rep) if rep is not None else Split(kids))
                bnew.append((lo, hi))
            grid.append(grow)
            bounds.append(bnew)
        levels.append(grid)
    return levels


def build_bottom_up(field: MotionField, geom: GridGeometry | None = None,
                    policy: MergePolicy = EXACT) -> QuadForest:
    """Group 2x2 sibling terminals level by level, from ``min_block`` up to ``max_block``."""
    geom = _check_geom(field, geom)
    top = build_levels(field, geom, policy)[-1]
    return QuadForest(geom, [n for row in top for n in row], field.d_max)


def build_top_down(field: MotionField, geom: GridGeometry | None = None) -> QuadForest:
    """Split from ``max_block`` downward wherever the covered vectors differ."""
    geom = _check_geom(field, geom)
    vec = field.vectors

    def build(r0, c0, n):
        block = vec[r0:r0 + n, c0:c0 + n].reshape(-1, 2)
        if n == 1 or bool((block == block[0]).all()):
            return Terminal(MotionVector(int(block[0, 0]), int(block[0, 1])))
        h = n // 2
        return Split((build(r0, c0, h), build(r0, c0 + h, h),
                      build(r0 + h, c0, h), build(r0 + h, c0 + h, h)))

    k = geom.leaves_per_root
    roots = [build(rr * k, rc * k, k) for rr in range(geom.root_rows) for rc in range(geom.root_cols)]
    return QuadForest(geom, roots, field.d_max)


def paint(node, out: np.ndarray, r0: int, c0: int, n: int, value_of) -> None:
    """Write ``value_of(terminal)`` over the base-block square a node covers."""
    if isinstance(node, Split):
        h = n // 2
        for child, (dr, dc) in zip(node.children, ((0, 0), (0, h), (h, 0), (h, h))):
            paint(child, out, r0 + dr, c0 + dc, h, value_of)
    else:
        out[r0:r0 + n, c0:c0 + n] = value_of(node)


def flatten(forest: QuadForest) -> MotionField:
    g = forest.geom
    out = np.zeros((g.rows, g.cols, 2), dtype=np.int16)
    k = g.leaves_per_root
    for i, root in enumerate(forest.roots):
        rr, rc = divmod(i, g.root_cols)
        paint(root, out, rr * k, rc * k, k, lambda t: tuple(t.vector))
    return MotionField(g, out, forest.d_max)


@dataclass(frozen=True)
class Bitstream:
    """Packed stream plus its unpadded length in bits."""

    data: bytes
    bit_count: int
    tree_bits: int = 0
    flag_bits: int = 0

    def __bytes__(self):
        return self.data

    def __len__(self):
        return len(self.data)


def _write_tree(w: BitWriter, node, side: int, min_block: int, terminals: list) -> None:
    if side > min_block:
        w.write_bit(isinstance(node, Split))
    elif isinstance(node, Split):
        raise ValueError("split node at the minimum block size")
    if isinstance(node, Split):
        for child in node.children:
            _write_tree(w, child, side // 2, min_block, terminals)
    else:
        terminals.append(node)


def write_vector(w: BitWriter, v) -> None:
    w.write_signed(v[0], VECTOR_BITS)
    w.write_signed(v[1], VECTOR_BITS)


def read_vector(r: BitReader) -> MotionVector:
    return MotionVector(r.read_signed(VECTOR_BITS), r.read_signed(VECTOR_BITS))


def encode_interframe(forest: QuadForest, with_flag: bool = False) -> Bitstream:
    w = BitWriter()
    if with_flag:
        w.write_bit(1)
    terminals: list = []
    for root in forest.roots:
        _write_tree(w, root, forest.geom.max_block, forest.geom.min_block, terminals)
    tree_bits = len(w) - int(with_flag)
    for t in terminals:
        write_vector(w, t.vector)
    return Bitstream(w.getvalue(), len(w), tree_bits, int(with_flag))


def read_shape(r: BitReader, side: int, min_block: int, make_leaf):
    """Parse the split/terminal bits of one subtree; leaves come from ``make_leaf(side)``."""
    if side > min_block and r.read_bit():
        h = side // 2
        return Split(tuple(read_shape(r, h, min_block, make_leaf) for _ in range(4)))
    return make_leaf(side)


def decode_interframe(bits, geom: GridGeometry, with_flag: bool = False,
                      d_max: int = DEFAULT_DMAX) -> QuadForest:
    r = BitReader(bytes(bits))
    if with_flag and not r.read_bit():
        raise StreamError("flag bit is 0: quadtree coding not in use")
    shapes = [read_shape(r, geom.max_block, geom.min_block, lambda side: None)
              for _ in range(geom.roots)]

    def fill(node):
        if node is None:
            v = read_vector(r)
            if max(abs(v.dx), abs(v.dy)) > d_max:
                raise StreamError(f"decoded vector {tuple(v)} exceeds d_max={d_max}")
            return Terminal(v)
        return Split(tuple(fill(c) for c in node.children))

    roots = [fill(s) for s in shapes]
    r.finish()
    return QuadForest(geom, roots, d_max)


@dataclass(frozen=True)
class CostReport:
    counts_per_size: dict = dc_field(hash=False)
    tree_bits: int = 0
    vector_bytes: int = 0
    flag_bits: int = 0
    total_bytes: int = 0
    baseline_bytes: int = 0
    base_blocks: int = 0
    min_block: int = 16

    @property
    def ratio_percent(self) -> float:
        return 100.0 * self.total_bytes / self.baseline_bytes

    @property
    def equivalent_subimages(self) -> dict:
        return {s: n * (s // self.min_block) ** 2 for s, n in self.counts_per_size.items()}


def count_by_size(nodes_with_side) -> dict:
    counts: dict[int, int] = {}
    for node, side in nodes_with_side:
        if not isinstance(node, Split):
            counts[side] = counts.get(side, 0) + 1
    return dict(sorted(counts.items()))


def cost_report(forest: QuadForest, with_flag: bool = False) -> CostReport:
    g = forest.geom
    nodes = list(forest.walk())
    counts = count_by_size(nodes)
    tree_bits = sum(1 for _, side in nodes if side > g.min_block)
    vector_bytes = sum(counts.values())
    flag = int(with_flag)
    total = -(-(flag + tree_bits + 8 * vector_bytes) // 8)
    return CostReport(counts, tree_bits, vector_bytes, flag, total, g.base_blocks,
                      g.base_blocks, g.min_block)


def full_split(side: int, min_block: int, leaf):
    if side == min_block:
        return leaf
    return Split(tuple(full_split(side // 2, min_block, leaf) for _ in range(4)))


def theoretical_bounds(geom: GridGeometry, with_flag: bool = False) -> tuple[CostReport, CostReport]:
    """Cost of the all-terminal-roots forest and of the fully split forest."""
    leaf = Terminal(MotionVector(0, 0))
    best = QuadForest(geom, [leaf] * geom.roots)
    worst = QuadForest(geom, [full_split(geom.max_block, geom.min_block, leaf)] * geom.roots)
    return cost_report(best, with_flag), cost_report(worst, with_flag)


def paper_ratio(percent: float, decimals: int = 0) -> str:
    """``100:X`` with ``X`` rounded as a table would print it."""
    if decimals:
        return f"100:{percent:.{decimals}f}"
    return f"100:{round(percent)}"


def subtree_bits(node, side: int, min_block: int) -> int:
    """Stream bits (tree plus vectors) spent on one subtree."""
    own = 1 if side > min_block else 0
    if isinstance(node, Split):
        return own + sum(subtree_bits(c, side // 2, min_block) for c in node.children)
    return own + 2 * VECTOR_BITS
