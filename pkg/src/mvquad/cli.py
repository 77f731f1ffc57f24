"""Command-line front end: ``mvquad estimate|encode|decode|reconstruct|bounds|report``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import container
from .bitio import StreamError
from .frames import FrameError, GeometryError, GridGeometry, load_pgm, load_raw_y8, store_pgm
from .inter_intra import (
    PenaltyPolicy, build_mixed_from_decisions, decide_field, decode_mixed, encode_mixed,
    flatten_decisions, mixed_cost_report, mixed_theoretical_bounds, read_decisions,
    write_decisions,
)
from .motion import SearchParams, estimate_field, read_field, write_field
from .prediction import frame_mad, reconstruct
from .quadtree import (
    MergePolicy, build_bottom_up, cost_report, decode_interframe, encode_interframe,
    flatten, paper_ratio, theoretical_bounds,
)
from .synthetic import table2_field, table3_field
from .temporal3d import (
    FieldPair, build_3d, cost_report_3d, decode_3d, encode_3d, flatten_3d,
)

log = logging.getLogger("mvquad")

MODE_ALIASES = {"inter": "inter", "mixed": "mixed", "3d": "temporal3d"}


def format_table(report) -> str:
    """Per-size composition plus bit/byte totals, laid out like the paper's tables."""
    lines = [f"{'BLOCK SIZE':<12}{'N° BLOCKS':>10}{'EQ. SUBIMAGES':>16}"]
    eq = report.equivalent_subimages
    for side, n in report.counts_per_size.items():
        lines.append(f"{f'{side}x{side}':<12}{n:>10}{eq[side]:>16}")
    lines.append(f"{'':<12}{'':>10}{sum(eq.values()):>16}")
    lines.append(f"tree bits:    {report.tree_bits}")
    if report.flag_bits:
        lines.append(f"flag bits:    {report.flag_bits}")
    lines.append(f"vector bytes: {report.vector_bytes}")
    if hasattr(report, "decision_bits"):
        lines.append(f"total bytes:  {report.total_bytes}")
        lines.append(f"decision bits: {report.decision_bits} vs {report.baseline_bits} uncoded")
    else:
        lines.append(f"total bytes:  {report.total_bytes} vs {report.baseline_bytes} uncoded")
    pct = report.ratio_percent
    lines.append(f"ratio:        {pct:.2f}%  ({paper_ratio(pct, 1)}, {paper_ratio(pct)})")
    return "\n".join(lines)


def _geom(args, width=None, height=None, min_block=None) -> GridGeometry:
    return GridGeometry(width or args.width, height or args.height,
                        min_block or args.min_block, args.max_block)


def _load_frame(path, args, index):
    if args.raw:
        if not (args.width and args.height):
            raise FrameError("--raw needs --width and --height")
        return load_raw_y8(path, args.width, args.height, index)
    return load_pgm(path)


def _merge(args) -> MergePolicy:
    return MergePolicy(args.merge_t, args.strict)


def cmd_estimate(args) -> int:
    ref = _load_frame(args.ref, args, args.ref_index)
    tgt = _load_frame(args.target, args, args.target_index)
    geom = GridGeometry(ref.width, ref.height, args.min_block, args.max_block)
    if args.width and args.height and (args.width, args.height) != (ref.width, ref.height):
        raise GeometryError(f"frames are {ref.width}x{ref.height}, not {args.width}x{args.height}")
    search = "full_search" if args.search == "full" else "conjugate_direction"
    params = SearchParams(args.dmax, search, args.passes)
    field = estimate_field(ref, tgt, geom, params)
    predicted, pred = reconstruct(ref, field)
    print(f"frame MAD without compensation: {frame_mad(ref, tgt):.4f}")
    print(f"frame MAD after prediction:     {frame_mad(predicted, tgt):.4f}")
    print(f"holes: {pred.hole_count}  overlaps: {pred.overlap_count}")
    mode = MODE_ALIASES[args.mode]
    if mode == "mixed":
        policy = PenaltyPolicy(args.penalty, args.adaptive, args.neighbor_bias)
        decisions = decide_field(field, ref, tgt, policy)
        n_intra = sum(d.kind.value == "intra" for row in decisions for d in row)
        print(f"blocks: {geom.base_blocks}  intra: {n_intra}")
        write_decisions(decisions, geom, args.output, field.d_max)
    else:
        print(f"blocks: {geom.base_blocks}")
        write_field(field, args.output)
    return 0


def _load_input_field(args):
    if args.table:
        return table2_field(args.seed) if args.table == 2 else table3_field(args.seed)
    if not args.field:
        raise ValueError("a field file or --table is required")
    return read_field(args.field[0], args.max_block)


def _build(args):
    """Forest, report and encoder for the requested mode."""
    mode = MODE_ALIASES[args.mode]
    if mode == "mixed":
        decisions, geom, d_max = read_decisions(args.field[0], args.max_block)
        forest = build_mixed_from_decisions(decisions, geom, _merge(args), d_max)
        return mode, forest, mixed_cost_report(forest, args.flag), lambda: encode_mixed(forest, args.flag)
    if mode == "temporal3d":
        if not args.field or len(args.field) != 2:
            raise ValueError("temporal3d mode needs two field files")
        pair = FieldPair(read_field(args.field[0], args.max_block), read_field(args.field[1], args.max_block))
        forest = build_3d(pair, policy=_merge(args))
        return mode, forest, cost_report_3d(forest), lambda: encode_3d(forest)
    field = _load_input_field(args)
    forest = build_bottom_up(field, policy=_merge(args))
    return mode, forest, cost_report(forest, args.flag), lambda: encode_interframe(forest, args.flag)


def cmd_encode(args) -> int:
    mode, forest, report, encode = _build(args)
    stream = encode()
    data = container.pack(forest.geom, forest.d_max, mode, args.flag and mode != "temporal3d", stream.data)
    with open(args.output, "wb") as fh:
        fh.write(data)
    print(format_table(report))
    print(f"stream: {stream.bit_count} bits, {len(stream.data)} bytes")
    return 0


def cmd_report(args) -> int:
    _, _, report, _ = _build(args)
    print(format_table(report))
    return 0


def cmd_decode(args) -> int:
    with open(args.container, "rb") as fh:
        box = container.unpack(fh.read())
    if box.mode == "mixed":
        forest = decode_mixed(box.payload, box.geom, box.with_flag, box.d_max)
        write_decisions(flatten_decisions(forest), box.geom, args.output, box.d_max)
    elif box.mode == "temporal3d":
        if not args.output2:
            raise ValueError("temporal3d containers decode to two files; pass --output2")
        pair = flatten_3d(decode_3d(box.payload, box.geom, box.d_max))
        write_field(pair.earlier, args.output)
        write_field(pair.later, args.output2)
    else:
        forest = decode_interframe(box.payload, box.geom, box.with_flag, box.d_max)
        write_field(flatten(forest), args.output)
    print(f"decoded {box.mode} stream: {box.geom.width}x{box.geom.height}, "
          f"blocks {box.geom.min_block}..{box.geom.max_block}")
    return 0


def cmd_reconstruct(args) -> int:
    ref = _load_frame(args.ref, args, args.ref_index)
    field = read_field(args.field, args.max_block)
    predicted, pred = reconstruct(ref, field)
    store_pgm(predicted, args.output)
    print(f"holes: {pred.hole_count}  overlaps: {pred.overlap_count}")
    if args.target:
        tgt = _load_frame(args.target, args, args.target_index)
        print(f"frame MAD after prediction: {frame_mad(predicted, tgt):.4f}")
    return 0


def cmd_bounds(args) -> int:
    geom = _geom(args)
    mode = MODE_ALIASES[args.mode]
    if mode == "mixed":
        best, worst = mixed_theoretical_bounds(geom, args.flag)
        n = geom.base_blocks
        print(f"INTER/INTRAFRAME ({n} blocks, {'with' if args.flag else 'without'} flag)")
        for name, rep in (("BETTER", best), ("WORST", worst)):
            print(f"{name:<7}{paper_ratio(rep.ratio_percent)} ({n}:{rep.decision_bits})  "
                  f"{rep.ratio_percent:.2f}%")
    elif mode == "inter":
        best, worst = theoretical_bounds(geom, args.flag)
        print(f"INTERFRAME (N={geom.base_blocks}, {'with' if args.flag else 'without'} flag)")
        for name, rep in (("BETTER", best), ("WORST", worst)):
            print(f"{name:<7}{paper_ratio(rep.ratio_percent)} (N:{rep.total_bytes})  "
                  f"{rep.ratio_percent:.2f}%")
    else:
        raise ValueError("bounds are defined for inter and mixed modes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvquad", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--width", type=int)
    common.add_argument("--height", type=int)
    common.add_argument("--min-block", type=int, default=16)
    common.add_argument("--max-block", type=int, default=64)
    common.add_argument("--mode", choices=sorted(MODE_ALIASES), default="inter")
    common.add_argument("--flag", action="store_true", help="prepend the quadtree-in-use flag bit")

    frames = argparse.ArgumentParser(add_help=False)
    frames.add_argument("--raw", action="store_true", help="frames are headerless Y8 planes")
    frames.add_argument("--ref-index", type=int, default=0)
    frames.add_argument("--target-index", type=int, default=1)

    coding = argparse.ArgumentParser(add_help=False)
    coding.add_argument("--merge-t", type=int, default=0, help="Chebyshev merge threshold (0 = exact)")
    coding.add_argument("--strict", action="store_true",
                        help="test the threshold against original vectors, not representatives")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common, frames], help="estimate a motion field")
    p.add_argument("ref")
    p.add_argument("target")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--dmax", type=int, default=7)
    p.add_argument("--search", choices=["cds", "full"], default="cds")
    p.add_argument("--passes", type=int, default=2)
    p.add_argument("--penalty", type=float, default=1.2)
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--neighbor-bias", type=float, default=1.25)
    p.set_defaults(func=cmd_estimate)

    for name, func, help_ in (("encode", cmd_encode, "quadtree-code a field into a container"),
                              ("report", cmd_report, "print the cost table of a field")):
        p = sub.add_parser(name, parents=[common, coding], help=help_)
        p.add_argument("field", nargs="*", help="field file(s); two for --mode 3d")
        p.add_argument("--table", type=int, choices=[2, 3], help="use a synthetic published composition")
        p.add_argument("--seed", type=int, default=0)
        if name == "encode":
            p.add_argument("-o", "--output", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("decode", help="decode a container back to field file(s)")
    p.add_argument("container")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--output2", help="second field for temporal3d containers")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("reconstruct", parents=[frames], help="predict a frame by writing blocks")
    p.add_argument("ref")
    p.add_argument("field")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--target")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--max-block", type=int, default=64)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bounds", parents=[common], help="best/worst theoretical compression")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "bounds" and not (args.width and args.height):
        parser.error("bounds needs --width and --height")
    try:
        return args.func(args)
    except (FrameError, GeometryError, StreamError, ValueError, OSError, IndexError) as exc:
        print(f"mvquad: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
