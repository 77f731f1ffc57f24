"""MSB-first bit packing."""

from __future__ import annotations


class StreamError(ValueError):
    """Raised when a bitstream cannot be decoded."""


class BitWriter:
    def __init__(self):
        self._bits: list[int] = []

    def __len__(self):
        return len(self._bits)

    def write_bit(self, bit: int) -> None:
        self._bits.append(1 if bit else 0)

    def write(self, value: int, nbits: int) -> None:
        for shift in range(nbits - 1, -1, -1):
            self._bits.append((value >> shift) & 1)

    def write_signed(self, value: int, nbits: int) -> None:
        """Two's complement; raises if ``value`` does not fit."""
        lo, hi = -(1 << (nbits - 1)), (1 << (nbits - 1)) - 1
        if not lo <= value <= hi:
            raise ValueError(f"{value} does not fit in {nbits}-bit two's complement")
        self.write(value & ((1 << nbits) - 1), nbits)

    @property
    def bits(self) -> list[int]:
        return list(self._bits)

    def getvalue(self) -> bytes:
        """Packed bytes, zero-padded to a byte boundary."""
        out = bytearray((len(self._bits) + 7) // 8)
        for i, b in enumerate(self._bits):
            if b:
                out[i >> 3] |= 0x80 >> (i & 7)
        return bytes(out)


class BitReader:
    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0
        self._nbits = len(self._data) * 8

    @property
    def position(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return self._nbits - self._pos

    def read_bit(self) -> int:
        if self._pos >= self._nbits:
            raise StreamError(f"stream exhausted at bit {self._pos}")
        b = (self._data[self._pos >> 3] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return b

    def read(self, nbits: int) -> int:
        if self._pos + nbits > self._nbits:
            raise StreamError(f"stream exhausted: need {nbits} bits at bit {self._pos}")
        v = 0
        for _ in range(nbits):
            v = (v << 1) | self.read_bit()
        return v

    def read_signed(self, nbits: int) -> int:
        v = self.read(nbits)
        if v & (1 << (nbits - 1)):
            v -= 1 << nbits
        return v

    def finish(self) -> None:
        """Check that only zero padding, less than one byte of it, remains."""
        rest = self.remaining
        if rest >= 8:
            raise StreamError(f"{rest // 8} unexpected trailing byte(s)")
        if rest and self.read(rest):
            raise StreamError("non-zero padding bits")
