"""Quadtree coding of block motion fields for interframe and inter/intraframe coders."""

from .frames import Frame, FrameError, GeometryError, GridGeometry, load_pgm, load_raw_y8, store_pgm, validate_geometry
from .motion import (
    MotionField, MotionVector, SearchParams, block_mad, conjugate_direction_search,
    estimate_field, full_search, read_field, write_field,
)
from .prediction import Prediction, fill_holes, frame_mad, reconstruct, write_prediction
from .bitio import BitReader, BitWriter, StreamError
from .quadtree import (
    Bitstream, CostReport, MergePolicy, QuadForest, Split, Terminal, build_bottom_up,
    build_top_down, cost_report, decode_interframe, encode_interframe, flatten,
    theoretical_bounds,
)
from .inter_intra import (
    INTER, INTRA, Decision, InterTerminal, IntraTerminal, MixedForest, PenaltyPolicy,
    PredictorKind, build_mixed, build_mixed_from_decisions, decide_block, decode_mixed,
    effective_penalty, encode_mixed, intra_error_dc, mixed_cost_report, mixed_theoretical_bounds,
)
from .temporal3d import (
    FieldPair, Forest3D, Split3D, TemporalPair, Terminal3D, build_3d, cost_report_3d,
    decode_3d, encode_3d, flatten_3d,
)

__version__ = "0.1.0"
