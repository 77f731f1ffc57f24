"""``MVQ1`` container: a fixed header carrying the geometry, then a bare stream."""

from __future__ import annotations

import struct
from typing import NamedTuple

from .bitio import StreamError
from .frames import GridGeometry

MAGIC = b"MVQ1"
_HEADER = struct.Struct(">4s5HBB")

MODES = {"inter": 0, "mixed": 1, "temporal3d": 2}
_MODE_NAMES = {v: k for k, v in MODES.items()}


class Container(NamedTuple):
    geom: GridGeometry
    d_max: int
    mode: str
    with_flag: bool
    payload: bytes


def pack(geom: GridGeometry, d_max: int, mode: str, with_flag: bool, payload: bytes) -> bytes:
    header = _HEADER.pack(MAGIC, geom.width, geom.height, geom.min_block, geom.max_block,
                          d_max, MODES[mode], int(with_flag))
    return header + bytes(payload)


def unpack(data: bytes) -> Container:
    if len(data) < _HEADER.size:
        raise StreamError("truncated container header")
    magic, width, height, min_block, max_block, d_max, mode, flag = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StreamError(f"bad magic {magic!r}")
    if mode not in _MODE_NAMES:
        raise StreamError(f"unknown mode byte {mode}")
    if flag not in (0, 1):
        raise StreamError(f"bad flag byte {flag}")
    geom = GridGeometry(width, height, min_block, max_block)
    return Container(geom, d_max, _MODE_NAMES[mode], bool(flag), data[_HEADER.size:])
