"""
Carry-less 64-bit range coder with 16-bit frequencies and byte-wise
renormalization.

The encoder emits one byte per renormalization shift and eight bytes on
flush; the decoder consumes the same count, so a well-formed stream is never
read past its end. Corruption is not detected in general: a damaged stream
decodes to wrong symbols unless it happens to run out of bytes.
"""

from typing import List, Sequence

import numpy as np

from ..utils.errors import EntropyCodingError
from .cdf import PRECISION, TOTAL, CdfTable

STATE_BITS = 64
MASK = (1 << STATE_BITS) - 1
TOP = 1 << (STATE_BITS - 8)
BOT = 1 << (STATE_BITS - 16)


class RangeEncoder:
    """Single-stream encoder; call :meth:`finish` once to obtain the bytes."""

    def __init__(self):
        self.low = 0
        self.range = MASK
        self._out = bytearray()
        self._finished = False

    def encode_interval(self, start: int, freq: int):
        if freq <= 0 or start < 0 or start + freq > TOTAL:
            raise EntropyCodingError(f"invalid interval [{start}, {start + freq}) of {TOTAL}")
        r = self.range >> PRECISION
        self.low += r * start
        self.range = r * freq
        self._normalize()

    def encode(self, symbol: int, table: CdfTable):
        i = int(symbol) - table.offset
        if not 0 <= i < table.num_symbols:
            raise EntropyCodingError(
                f"symbol {symbol} outside table support [{table.offset}, {table.offset + table.num_symbols})"
            )
        start = int(table.cdf[i])
        self.encode_interval(start, int(table.cdf[i + 1]) - start)

    def _normalize(self):
        low, rng = self.low, self.range
        while True:
            if (low ^ (low + rng)) >= TOP:
                if rng >= BOT:
                    break
                rng = (-low) & (BOT - 1)
            self._out.append(low >> (STATE_BITS - 8))
            low = (low << 8) & MASK
            rng = (rng << 8) & MASK
        self.low, self.range = low, rng

    def finish(self) -> bytes:
        if not self._finished:
            self._out += self.low.to_bytes(8, "big")
            self._finished = True
        return bytes(self._out)


class RangeDecoder:
    """Decoder over a byte string produced by :class:`RangeEncoder`."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0
        self.low = 0
        self.range = MASK
        self.code = 0
        for _ in range(8):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise EntropyCodingError("stream exhausted")
        byte = self._data[self._pos]
        self._pos += 1
        return byte

    def decode_target(self) -> int:
        """Frequency position of the next symbol; follow with :meth:`consume`."""
        self._r = self.range >> PRECISION
        target = ((self.code - self.low) & MASK) // self._r
        if target >= TOTAL:
            raise EntropyCodingError("corrupt stream: target outside the frequency range")
        return target

    def consume(self, start: int, freq: int):
        self.low += self._r * start
        self.range = self._r * freq
        low, rng, code = self.low, self.range, self.code
        while True:
            if (low ^ (low + rng)) >= TOP:
                if rng >= BOT:
                    break
                rng = (-low) & (BOT - 1)
            code = ((code << 8) | self._next_byte()) & MASK
            low = (low << 8) & MASK
            rng = (rng << 8) & MASK
        self.low, self.range, self.code = low, rng, code

    def decode_index(self, cdf: np.ndarray) -> int:
        """Decode a symbol index against a cumulative array starting at 0 and ending at TOTAL."""
        target = self.decode_target()
        i = int(np.searchsorted(cdf, target, side="right")) - 1
        start = int(cdf[i])
        self.consume(start, int(cdf[i + 1]) - start)
        return i

    def decode(self, table: CdfTable) -> int:
        return self.decode_index(table.cdf) + table.offset

    @property
    def bytes_consumed(self) -> int:
        return self._pos


def rc_encode(symbols: Sequence[int], tables: Sequence[CdfTable]) -> bytes:
    """
    Range-code ``symbols[i]`` with ``tables[i]``.

    Args:
        symbols: Integer symbols
        tables: One table per symbol

    Returns:
        Encoded bytes
    """
    if len(symbols) != len(tables):
        raise EntropyCodingError(f"{len(symbols)} symbols but {len(tables)} tables")
    encoder = RangeEncoder()
    for symbol, table in zip(symbols, tables):
        encoder.encode(symbol, table)
    return encoder.finish()


def rc_decode(data: bytes, tables: Sequence[CdfTable], count: int) -> List[int]:
    """Decode ``count`` symbols; ``tables`` must match those used by :func:`rc_encode`."""
    if count > len(tables):
        raise EntropyCodingError(f"need {count} tables, got {len(tables)}")
    if count == 0:
        return []
    decoder = RangeDecoder(data)
    return [decoder.decode(tables[i]) for i in range(count)]
