"""Grayscale frame containers and PGM / raw Y8 readers and writers."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class FrameError(ValueError):
    """Raised for unreadable or malformed frame data."""


class GeometryError(ValueError):
    """Raised when a frame or block grid violates the tiling rules."""


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit luminance raster.

    ``pixels`` is a read-only ``(height, width)`` uint8 array.
    """

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise FrameError(f"frame must be a non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise FrameError("sample values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)
        if self.index < 0:
            raise FrameError("frame index must be nonnegative")

    @classmethod
    def from_samples(cls, width: int, height: int, samples, index: int = 0) -> "Frame":
        samples = list(samples) if not isinstance(samples, (bytes, np.ndarray)) else samples
        arr = np.asarray(bytearray(samples) if isinstance(samples, bytes) else samples)
        if arr.size != width * height:
            raise FrameError(f"expected {width * height} samples, got {arr.size}")
        return cls(arr.reshape(height, width), index)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> list[int]:
        return self.pixels.ravel().tolist()

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"Frame({self.width}x{self.height}, index={self.index})"


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class GridGeometry:
    """Frame size plus the smallest and largest quadtree block sides."""

    width: int
    height: int
    min_block: int = 16
    max_block: int = 64

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("degenerate geometry: width and height must be positive")
        if not (_is_pow2(self.min_block) and _is_pow2(self.max_block)):
            raise GeometryError("block sizes must be powers of two")
        if self.min_block > self.max_block:
            raise GeometryError("min_block must not exceed max_block")
        if self.width % self.max_block or self.height % self.max_block:
            raise GeometryError(
                f"{self.width}x{self.height} is not a multiple of max_block {self.max_block}"
            )

    @property
    def levels(self) -> int:
        return (self.max_block // self.min_block).bit_length()

    @property
    def cols(self) -> int:
        """Base blocks per row."""
        return self.width // self.min_block

    @property
    def rows(self) -> int:
        return self.height // self.min_block

    @property
    def base_blocks(self) -> int:
        return self.rows * self.cols

    @property
    def root_cols(self) -> int:
        return self.width // self.max_block

    @property
    def root_rows(self) -> int:
        return self.height // self.max_block

    @property
    def roots(self) -> int:
        return self.root_rows * self.root_cols

    @property
    def leaves_per_root(self) -> int:
        """Base blocks along one side of a root."""
        return self.max_block // self.min_block


def validate_geometry(frame: Frame, geom: GridGeometry) -> None:
    if not isinstance(geom, GridGeometry):
        raise GeometryError("geometry required")
    if (frame.width, frame.height) != (geom.width, geom.height):
        raise GeometryError(
            f"frame is {frame.width}x{frame.height} but geometry is {geom.width}x{geom.height}"
        )


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FrameError("malformed PGM header")
    return data[start:pos], pos


def load_pgm(path, index: int = 0) -> Frame:
    """Read a binary (P5) graymap with maxval <= 255."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise FrameError(f"missing file: {path}") from None

    pos = 0
    try:
        magic, pos = _read_token(data, pos)
        if magic != b"P5":
            raise FrameError(f"not a binary graymap (magic {magic!r})")
        fields = []
        for _ in range(3):
            tok, pos = _read_token(data, pos)
            fields.append(int(tok))
    except ValueError as exc:
        if isinstance(exc, FrameError):
            raise
        raise FrameError(f"malformed PGM header: {exc}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FrameError("malformed PGM header: non-positive dimensions")
    if maxval > 255:
        raise FrameError(f"unsupported sample depth (maxval {maxval})")
    if maxval <= 0:
        raise FrameError("malformed PGM header: maxval must be positive")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise FrameError(f"truncated pixel data: {len(payload)} of {width * height} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    if np.any(pixels > maxval):
        raise FrameError("sample exceeds declared maxval")
    return Frame(pixels.copy(), index)


def store_pgm(frame: Frame, path) -> None:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frame.pixels.tobytes())


def load_raw_y8(path, width: int, height: int, frame_index: int = 0) -> Frame:
    """Return one plane of a headerless concatenated 8-bit luminance file."""
    if width <= 0 or height <= 0:
        raise FrameError("degenerate geometry: width and height must be positive")
    if frame_index < 0:
        raise FrameError("frame index out of range")
    plane = width * height
    try:
        size = os.path.getsize(path)
    except FileNotFoundError:
        raise FrameError(f"missing file: {path}") from None
    if size < (frame_index + 1) * plane:
        raise FrameError(
            f"frame {frame_index} out of range: file holds {size // plane} frame(s)"
        )
    with open(path, "rb") as fh:
        fh.seek(frame_index * plane)
        buf = fh.read(plane)
    return Frame(np.frombuffer(buf, dtype=np.uint8).reshape(height, width).copy(), frame_index)


def raw_frame_count(path, width: int, height: int) -> int:
    return os.path.getsize(path) // (width * height)
