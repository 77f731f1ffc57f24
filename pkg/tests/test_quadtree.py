import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvquad import GridGeometry, MotionField, MotionVector
from mvquad.bitio import StreamError
from mvquad.quadtree import (
    MergePolicy, QuadForest, Split, Terminal, build_bottom_up, build_top_down, cost_report,
    decode_interframe, encode_interframe, flatten, merge_representative, paper_ratio,
    theoretical_bounds,
)
from mvquad.synthetic import TABLE2_COUNTS, TABLE3_COUNTS, forest_with_counts, table2_field, table3_field

from conftest import GEOMETRY_CLASSES, random_field, random_forest

G256 = GridGeometry(256, 256, 16, 64)


def distinct_field(geom):
    """Every base block gets a vector different from its three siblings."""
    vec = np.zeros((geom.rows, geom.cols, 2), dtype=np.int16)
    for r in range(geom.rows):
        for c in range(geom.cols):
            vec[r, c] = ((r % 2) * 2 + c % 2 - 2, 0)
    return MotionField(geom, vec)


def test_uniform_field_gives_terminal_roots():
    forest = build_bottom_up(MotionField.uniform(G256, (2, -1)))
    assert forest.roots == (Terminal(MotionVector(2, -1)),) * 16


def test_distinct_field_fully_split():
    forest = build_bottom_up(distinct_field(G256))
    rep = cost_report(forest)
    assert rep.counts_per_size == {16: 256}
    assert all(isinstance(r, Split) for r in forest.roots)


def test_table2_composition():
    forest = build_bottom_up(table2_field())
    rep = cost_report(forest)
    assert rep.counts_per_size == TABLE2_COUNTS
    assert rep.equivalent_subimages == {16: 68, 32: 60, 64: 128}
    assert sum(rep.equivalent_subimages.values()) == 256
    assert (rep.tree_bits, rep.vector_bytes, rep.total_bytes) == (48, 91, 97)
    assert paper_ratio(rep.ratio_percent, 1) == "100:37.9"


def test_table3_composition():
    rep = cost_report(build_bottom_up(table3_field()))
    assert rep.counts_per_size == TABLE3_COUNTS
    assert rep.equivalent_subimages == {8: 412, 16: 356, 32: 192, 64: 64}
    assert (rep.tree_bits, rep.vector_bytes) == (268, 514)
    # 268 + 8 * 514 bits = 4380 bits -> 548 bytes
    assert rep.total_bytes == 548
    assert paper_ratio(rep.ratio_percent) == "100:54"
    assert 53 <= rep.ratio_percent <= 54


@pytest.mark.parametrize("seed", range(5))
def test_synthetic_forest_is_canonical(seed):
    forest = forest_with_counts(G256, TABLE2_COUNTS, seed)
    assert build_bottom_up(flatten(forest)) == forest


def test_synthetic_rejects_impossible_counts():
    with pytest.raises(ValueError):
        forest_with_counts(G256, {16: 10, 64: 8})
    with pytest.raises(ValueError):
        forest_with_counts(G256, {64: 17})


def test_hand_encoding_single_root():
    g = GridGeometry(64, 64, 16, 64)
    forest = build_bottom_up(MotionField.uniform(g, (1, -2)))
    stream = encode_interframe(forest)
    # 0 (terminal root), 0001 (dx = 1), 1110 (dy = -2), then 7 padding zeros
    assert stream.bit_count == 9
    assert stream.data == bytes([0x0F, 0x00])
    assert decode_interframe(bytes([0x0F, 0x00]), g) == forest


def test_hand_encoding_one_split():
    g = GridGeometry(32, 32, 16, 32)
    kids = tuple(Terminal(MotionVector(*v)) for v in [(0, 0), (1, 0), (0, 1), (-1, -1)])
    forest = QuadForest(g, [Split(kids)])
    # 1 | 0000 0000 | 0001 0000 | 0000 0001 | 1111 1111
    bits = "1" + "00000000" + "00010000" + "00000001" + "11111111"
    bits += "0" * (-len(bits) % 8)
    expect = bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))
    assert encode_interframe(forest).data == expect
    assert decode_interframe(expect, g) == forest


def test_table2_stream_lengths_and_truncation():
    forest = build_bottom_up(table2_field())
    stream = encode_interframe(forest)
    assert stream.tree_bits == 48
    assert stream.bit_count == 48 + 8 * 91
    assert len(stream.data) == 97
    assert decode_interframe(stream.data, G256) == forest
    with pytest.raises(StreamError, match="exhausted"):
        decode_interframe(stream.data[:96], G256)


def test_decode_errors():
    g = GridGeometry(64, 64, 16, 64)
    forest = build_bottom_up(MotionField.uniform(g, (1, -2)))
    with_flag = encode_interframe(forest, with_flag=True)
    assert with_flag.data == bytes([0x87, 0x80])
    assert decode_interframe(with_flag.data, g, with_flag=True) == forest
    with pytest.raises(StreamError, match="flag"):
        decode_interframe(bytes([0x07, 0x80]), g, with_flag=True)
    with pytest.raises(StreamError, match="padding"):
        decode_interframe(bytes([0x0F, 0x01]), g)
    with pytest.raises(StreamError, match="trailing"):
        decode_interframe(bytes([0x0F, 0x00, 0x00]), g)


def test_encode_rejects_wide_vectors():
    g = GridGeometry(64, 64, 16, 64)
    forest = QuadForest(g, [Terminal(MotionVector(8, 0))], d_max=8)
    with pytest.raises(ValueError):
        encode_interframe(forest)


def test_relaxed_merge_representative():
    g = GridGeometry(16, 16, 8, 16)
    vec = np.array([[[1, 0], [1, 1]], [[0, 0], [0, 1]]])
    field = MotionField(g, vec)
    forest = build_bottom_up(field, policy=MergePolicy.relaxed(1))
    # mean (0.5, 0.5) rounds toward zero
    assert forest.roots == (Terminal(MotionVector(0, 0)),)
    out = flatten(forest)
    assert np.abs(out.vectors - field.vectors).max() <= 1
    assert merge_representative([(-1, 0), (-1, -1), (0, 0), (0, -1)]) == (0, 0)
    assert merge_representative([(-3, 5), (-3, 5), (-3, 4), (-2, 5)]) == (-2, 4)
    assert build_bottom_up(field).roots[0] == Split(tuple(Terminal(MotionVector(*v)) for v in vec.reshape(4, 2)))


def test_relaxed_threshold_is_chebyshev():
    g = GridGeometry(16, 16, 8, 16)
    field = MotionField(g, np.array([[[0, 0], [2, 0]], [[1, 1], [1, -1]]]))
    assert isinstance(build_bottom_up(field, policy=MergePolicy.relaxed(1)).roots[0], Split)
    assert isinstance(build_bottom_up(field, policy=MergePolicy.relaxed(2)).roots[0], Terminal)


def test_strict_variant_uses_original_leaves():
    g = GridGeometry(32, 32, 8, 32)
    vec = np.zeros((4, 4, 2), dtype=np.int16)
    vec[0:2, 0:2] = [[[0, 0], [1, 0]], [[0, 0], [1, 0]]]   # rep (0, 0)
    vec[0:2, 2:4] = [[[1, 0], [1, 0]], [[1, 0], [1, 0]]]   # rep (1, 0)
    vec[2:4, 0:2] = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
    vec[2:4, 2:4] = [[[2, 0], [1, 0]], [[1, 0], [1, 0]]]   # rep (1, 0); leaves span 0..2
    field = MotionField(g, vec)
    loose = build_bottom_up(field, policy=MergePolicy.relaxed(1))
    strict = build_bottom_up(field, policy=MergePolicy.relaxed(1, strict=True))
    assert isinstance(loose.roots[0], Terminal)
    assert isinstance(strict.roots[0], Split)
    assert np.abs(flatten(strict).vectors - vec).max() <= 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(GEOMETRY_CLASSES))
def test_top_down_equals_bottom_up(seed, geom):
    field = random_field(geom, random.Random(seed))
    assert build_top_down(field) == build_bottom_up(field)
    assert flatten(build_bottom_up(field)) == field


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(GEOMETRY_CLASSES), st.booleans())
def test_codec_inverse(seed, geom, flag):
    forest = random_forest(geom, random.Random(seed))
    stream = encode_interframe(forest, flag)
    assert decode_interframe(stream.data, geom, flag) == forest
    rep = cost_report(forest, flag)
    assert stream.bit_count == rep.flag_bits + rep.tree_bits + 8 * rep.vector_bytes
    assert len(stream.data) == rep.total_bytes


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(GEOMETRY_CLASSES), st.integers(1, 3), st.booleans())
def test_relaxed_error_bound(seed, geom, t, strict):
    field = random_field(geom, random.Random(seed))
    out = flatten(build_bottom_up(field, policy=MergePolicy.relaxed(t, strict)))
    err = int(np.abs(out.vectors - field.vectors).max())
    assert err <= (t if strict else t * (geom.levels - 1)) or (geom.levels == 1 and err == 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(GEOMETRY_CLASSES))
def test_relaxing_never_costs_more(seed, geom):
    field = random_field(geom, random.Random(seed))
    prev = None
    for t in range(0, 5):
        rep = cost_report(build_bottom_up(field, policy=MergePolicy.relaxed(t)))
        cost = (rep.tree_bits + rep.vector_bytes, rep.total_bytes)
        if prev:
            assert cost[0] <= prev[0] and cost[1] <= prev[1]
        prev = cost


@given(st.integers(0, 2**32), st.sampled_from(GEOMETRY_CLASSES))
def test_cost_identity(seed, geom):
    rep = cost_report(random_forest(geom, random.Random(seed)))
    assert sum(rep.equivalent_subimages.values()) == geom.base_blocks
    assert rep.vector_bytes == sum(rep.counts_per_size.values())


def test_theoretical_bounds_table1():
    g = GridGeometry(256, 128, 16, 64)
    best, worst = theoretical_bounds(g)
    assert (best.tree_bits, best.vector_bytes, best.total_bytes) == (8, 8, 9)
    assert (worst.tree_bits, worst.vector_bytes, worst.total_bytes) == (40, 128, 133)
    assert paper_ratio(best.ratio_percent) == "100:7"
    assert paper_ratio(worst.ratio_percent) == "100:104"
    best_f, worst_f = theoretical_bounds(g, with_flag=True)
    assert best_f.total_bytes == 10 and paper_ratio(best_f.ratio_percent) == "100:8"
    # fully split with flag: 41 + 1024 bits; the published N:110 is not a fully split tree
    assert worst_f.total_bytes == 134


def test_theoretical_bounds_single_level():
    g = GridGeometry(64, 64, 16, 16)
    best, worst = theoretical_bounds(g)
    assert best == worst
    assert best.tree_bits == 0 and best.total_bytes == g.base_blocks == best.baseline_bytes


def test_geometry_mismatch():
    field = MotionField.uniform(GridGeometry(64, 64, 16, 64))
    with pytest.raises(ValueError):
        build_bottom_up(field, GridGeometry(128, 64, 16, 64))
