import random

import numpy as np
import pytest

from mvquad import Frame, GridGeometry, MotionVector
from mvquad.quadtree import QuadForest, Split, Terminal, flatten


def random_vector(rng, d_max=7):
    return MotionVector(rng.randint(-d_max, d_max), rng.randint(-d_max, d_max))


def random_node(rng, side, min_block, p_split=0.5, leaf=None):
    leaf = leaf or (lambda: Terminal(random_vector(rng)))
    if side > min_block and rng.random() < p_split:
        return Split(tuple(random_node(rng, side // 2, min_block, p_split, leaf) for _ in range(4)))
    return leaf()


def random_forest(geom, rng, p_split=0.5):
    """Forest with random shape; sibling vectors may collide, so it need not be canonical."""
    return QuadForest(geom, [random_node(rng, geom.max_block, geom.min_block, p_split)
                             for _ in range(geom.roots)])


def random_field(geom, rng, p_split=None, palette=None):
    """Field with block structure: flattened random forest, vectors from a small palette
    so that merges and near-merges are common."""
    p = rng.random() if p_split is None else p_split
    pal = palette or rng.randint(1, 6)
    vecs = [random_vector(rng) for _ in range(pal)]
    forest = QuadForest(geom, [random_node(rng, geom.max_block, geom.min_block, p,
                                           lambda: Terminal(rng.choice(vecs)))
                               for _ in range(geom.roots)])
    return flatten(forest)


GEOMETRY_CLASSES = [
    GridGeometry(64, 64, 16, 64),
    GridGeometry(128, 128, 8, 64),
    GridGeometry(256, 128, 16, 64),
    GridGeometry(64, 32, 8, 32),
    GridGeometry(32, 32, 16, 16),
]


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def geom64():
    return GridGeometry(64, 64, 16, 64)


def noise_frame(seed, w=64, h=64):
    return Frame(np.random.default_rng(seed).integers(0, 256, (h, w), dtype=np.uint8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
