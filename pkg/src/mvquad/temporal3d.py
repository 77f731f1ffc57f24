"""Spatio-temporal quadtree over the motion fields of two consecutive frames.

A cell of the 3-D forest is one of

* ``Terminal3D``: one vector shared by both fields over the cell (span 2);
* ``Split3D``: four spatial sub-cells;
* ``TemporalPair``: independent 2-D subtrees for the earlier and the later
  field, whose terminals are the span-1 terminals.

Stream layout (an extension format, same conventions as the 2-D stream):
a cell larger than ``min_block`` emits ``1`` for ``Split3D``, otherwise
``0`` followed by a span bit (``1`` = ``Terminal3D``, ``0`` =
``TemporalPair``); ``min_block`` cells emit only the span bit. A pair
continues with the 2-D tree bits of the earlier subtree, then of the later
one. Vectors follow the tree section in traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitio import BitReader, BitWriter, StreamError
from .frames import GeometryError, GridGeometry
from .motion import DEFAULT_DMAX, MotionField, MotionVector
from .quadtree import (
    EXACT, Bitstream, CostReport, MergePolicy, Split, Terminal, VECTOR_BITS,
    _quads, _write_tree, build_levels, paint, read_shape, read_vector,
    subtree_bits, try_merge, walk_node, write_vector,
)


@dataclass(frozen=True)
class FieldPair:
    earlier: MotionField
    later: MotionField

    def __post_init__(self):
        if self.earlier.geom != self.later.geom:
            raise GeometryError("both fields of a pair must share geometry")

    @property
    def geom(self) -> GridGeometry:
        return self.earlier.geom


@dataclass(frozen=True)
class Terminal3D:
    vector: MotionVector
    temporal_span: int = 2


@dataclass(frozen=True)
class Split3D:
    children: tuple


@dataclass(frozen=True)
class TemporalPair:
    earlier: object  # 2-D QuadNode
    later: object


@dataclass(frozen=True)
class Forest3D:
    geom: GridGeometry
    roots: tuple
    d_max: int = DEFAULT_DMAX

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        if len(self.roots) != self.geom.roots:
            raise GeometryError(f"expected {self.geom.roots} roots, got {len(self.roots)}")

    def walk(self):
        """Yield ``(node, side)`` for 3-D cells in stream order (pair subtrees not entered)."""
        def rec(node, side):
            yield node, side
            if isinstance(node, Split3D):
                for c in node.children:
                    yield from rec(c, side // 2)
        for root in self.roots:
            yield from rec(root, self.geom.max_block)

    def terminals(self):
        """``(vector, span, side)`` for every terminal in stream order."""
        out = []
        for node, side in self.walk():
            if isinstance(node, Terminal3D):
                out.append((node.vector, 2, side))
            elif isinstance(node, TemporalPair):
                for sub in (node.earlier, node.later):
                    out += [(n.vector, 1, s) for n, s in walk_node(sub, side) if isinstance(n, Terminal)]
        return out


def _cell_bits(node, side, min_block) -> int:
    own = 1 if side > min_block else 0
    if isinstance(node, Split3D):
        return own + sum(_cell_bits(c, side // 2, min_block) for c in node.children)
    if isinstance(node, Terminal3D):
        return own + 1 + 2 * VECTOR_BITS
    return (own + 1 + subtree_bits(node.earlier, side, min_block)
            + subtree_bits(node.later, side, min_block))


def build_3d(pair: FieldPair, geom: GridGeometry | None = None,
             policy: MergePolicy = EXACT) -> Forest3D:
    """Bottom-up spatio-temporal grouping.

    A cell becomes a shared terminal when its vectors in both fields merge
    under ``policy``. Otherwise the cheaper of a spatial split and an
    independent per-field pair is kept (the split on ties), so the forest
    never costs more than coding the two fields separately plus two bits
    per root.
    """
    geom = geom or pair.geom
    if (geom.width, geom.height, geom.min_block) != (pair.geom.width, pair.geom.height, pair.geom.min_block):
        raise GeometryError("field pair does not match geometry")
    d_max = pair.earlier.d_max
    mb = geom.min_block
    lev_e = build_levels(pair.earlier, geom, policy)
    lev_l = build_levels(pair.later, geom, policy)

    grid, bounds = [], []
    for r in range(geom.rows):
        row, brow = [], []
        for c in range(geom.cols):
            e, l = pair.earlier[r, c], pair.later[r, c]
            lo = (min(e.dx, l.dx), min(e.dy, l.dy))
            hi = (max(e.dx, l.dx), max(e.dy, l.dy))
            rep = try_merge([e, l], policy, d_max, (lo, hi))
            row.append(Terminal3D(rep) if rep is not None
                       else TemporalPair(Terminal(e), Terminal(l)))
            brow.append((lo, hi))
        grid.append(row)
        bounds.append(brow)

    side = mb
    for level in range(1, geom.levels):
        side *= 2
        nq, bq = _quads(grid), _quads(bounds)
        grid, bounds = [], []
        for r, (nrow, brow) in enumerate(zip(nq, bq)):
            grow, bnew = [], []
            for c, (kids, kb) in enumerate(zip(nrow, brow)):
                lo = (min(b[0][0] for b in kb), min(b[0][1] for b in kb))
                hi = (max(b[1][0] for b in kb), max(b[1][1] for b in kb))
                rep = None
                if all(isinstance(k, Terminal3D) for k in kids):
                    rep = try_merge([k.vector for k in kids], policy, d_max, (lo, hi))
                if rep is not None:
                    node = Terminal3D(rep)
                else:
                    split = Split3D(kids)
                    alt = TemporalPair(lev_e[level][r][c], lev_l[level][r][c])
                    node = alt if _cell_bits(alt, side, mb) < _cell_bits(split, side, mb) else split
                grow.append(node)
                bnew.append((lo, hi))
            grid.append(grow)
            bounds.append(bnew)
    return Forest3D(geom, [n for row in grid for n in row], d_max)


def flatten_3d(forest: Forest3D) -> FieldPair:
    g = forest.geom
    early = np.zeros((g.rows, g.cols, 2), dtype=np.int16)
    late = np.zeros_like(early)
    vec = lambda t: tuple(t.vector)

    def rec(node, r0, c0, n):
        if isinstance(node, Split3D):
            h = n // 2
            for child, (dr, dc) in zip(node.children, ((0, 0), (0, h), (h, 0), (h, h))):
                rec(child, r0 + dr, c0 + dc, h)
        elif isinstance(node, Terminal3D):
            early[r0:r0 + n, c0:c0 + n] = tuple(node.vector)
            late[r0:r0 + n, c0:c0 + n] = tuple(node.vector)
        else:
            paint(node.earlier, early, r0, c0, n, vec)
            paint(node.later, late, r0, c0, n, vec)

    k = g.leaves_per_root
    for i, root in enumerate(forest.roots):
        rr, rc = divmod(i, g.root_cols)
        rec(root, rr * k, rc * k, k)
    return FieldPair(MotionField(g, early, forest.d_max), MotionField(g, late, forest.d_max))


def encode_3d(forest: Forest3D) -> Bitstream:
    g = forest.geom
    w = BitWriter()
    vectors: list = []

    def rec(node, side):
        if side > g.min_block:
            w.write_bit(isinstance(node, Split3D))
        if isinstance(node, Split3D):
            if side <= g.min_block:
                raise ValueError("split node at the minimum block size")
            for c in node.children:
                rec(c, side // 2)
        elif isinstance(node, Terminal3D):
            w.write_bit(1)
            vectors.append(node.vector)
        else:
            w.write_bit(0)
            terms: list = []
            _write_tree(w, node.earlier, side, g.min_block, terms)
            _write_tree(w, node.later, side, g.min_block, terms)
            vectors.extend(t.vector for t in terms)

    for root in forest.roots:
        rec(root, g.max_block)
    tree_bits = len(w)
    for v in vectors:
        write_vector(w, v)
    return Bitstream(w.getvalue(), len(w), tree_bits, 0)


def decode_3d(bits, geom: GridGeometry, d_max: int = DEFAULT_DMAX) -> Forest3D:
    r = BitReader(bytes(bits))
    leaf = lambda side: None

    def shape(side):
        if side > geom.min_block and r.read_bit():
            return Split3D(tuple(shape(side // 2) for _ in range(4)))
        if r.read_bit():
            return Terminal3D(None)
        return TemporalPair(read_shape(r, side, geom.min_block, leaf),
                            read_shape(r, side, geom.min_block, leaf))

    def vector():
        v = read_vector(r)
        if max(abs(v.dx), abs(v.dy)) > d_max:
            raise StreamError(f"decoded vector {tuple(v)} exceeds d_max={d_max}")
        return v

    def fill2d(node):
        if node is None:
            return Terminal(vector())
        return Split(tuple(fill2d(c) for c in node.children))

    def fill(node):
        if isinstance(node, Split3D):
            return Split3D(tuple(fill(c) for c in node.children))
        if isinstance(node, Terminal3D):
            return Terminal3D(vector())
        return TemporalPair(fill2d(node.earlier), fill2d(node.later))

    shapes = [shape(geom.max_block) for _ in range(geom.roots)]
    roots = [fill(s) for s in shapes]
    r.finish()
    return Forest3D(geom, roots, d_max)


@dataclass(frozen=True)
class Cost3DReport(CostReport):
    span2_terminals: int = 0
    span1_terminals: int = 0


def cost_report_3d(forest: Forest3D) -> Cost3DReport:
    """Costs of the 3-D stream; the baseline is one byte per base block in each field."""
    g = forest.geom
    terms = forest.terminals()
    counts: dict[int, int] = {}
    for _, _, side in terms:
        counts[side] = counts.get(side, 0) + 1
    vector_bytes = len(terms)
    total_bits = sum(_cell_bits(root, g.max_block, g.min_block) for root in forest.roots)
    tree_bits = total_bits - 8 * vector_bytes
    span2 = sum(1 for _, s, _ in terms if s == 2)
    return Cost3DReport(dict(sorted(counts.items())), tree_bits, vector_bytes, 0,
                        -(-total_bits // 8), 2 * g.base_blocks, g.base_blocks, g.min_block,
                        span2, len(terms) - span2)
