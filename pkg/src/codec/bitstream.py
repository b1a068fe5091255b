"""
Bitstream container.

Layout (little-endian):

    "CCS1" | version u8 | flags u8 | width u32 | height u32 | N_Y u16 | N_UV u16
    | lambda_id u8 | [original width u32 | original height u32 if padded]
    | 4 x (length u32 | payload) in order z_Y, y_Y, z_UV, y_UV

``width``/``height`` are the coded (padded) dimensions. flags bit 0 marks a
conditional model, bit 1 a padded image. There is no checksum: a damaged
payload is only noticed if decoding runs out of bytes.
"""

import struct
from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..utils.errors import FormatError
from .config import LAMBDAS

MAGIC = b"CCS1"
VERSION = 1
FLAG_CONDITIONAL = 0x01
FLAG_PADDED = 0x02

SUBSTREAMS = ("z_y", "y_y", "z_uv", "y_uv")

_HEADER = struct.Struct("<4sBBIIHHB")
_SIZE = struct.Struct("<II")
_LENGTH = struct.Struct("<I")


@dataclass
class Bitstream:
    width: int
    height: int
    n_y: int
    n_uv: int
    lambda_id: int
    conditional: bool
    original_size: Optional[Tuple[int, int]] = None
    z_y: bytes = b""
    y_y: bytes = b""
    z_uv: bytes = b""
    y_uv: bytes = b""
    version: int = field(default=VERSION)

    @property
    def padded(self) -> bool:
        return self.original_size is not None

    @property
    def output_size(self) -> Tuple[int, int]:
        """(width, height) of the decoded image."""
        return self.original_size if self.padded else (self.width, self.height)

    def substreams(self) -> Tuple[bytes, bytes, bytes, bytes]:
        return tuple(getattr(self, name) for name in SUBSTREAMS)

    def substream_bits(self) -> dict:
        return {name: 8 * len(getattr(self, name)) for name in SUBSTREAMS}

    def serialize(self) -> bytes:
        flags = (FLAG_CONDITIONAL if self.conditional else 0) | (FLAG_PADDED if self.padded else 0)
        try:
            parts = [_HEADER.pack(MAGIC, self.version, flags, self.width, self.height,
                                  self.n_y, self.n_uv, self.lambda_id)]
            if self.padded:
                parts.append(_SIZE.pack(*self.original_size))
            for payload in self.substreams():
                parts.append(_LENGTH.pack(len(payload)))
                parts.append(bytes(payload))
        except struct.error as e:
            raise FormatError(f"bitstream field out of range: {e}") from None
        return b"".join(parts)

    @classmethod
    def parse(cls, data: bytes) -> "Bitstream":
        data = bytes(data)
        if len(data) < _HEADER.size:
            raise FormatError("bitstream shorter than its header")
        magic, version, flags, width, height, n_y, n_uv, lambda_id = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported bitstream version {version}")
        if flags & ~(FLAG_CONDITIONAL | FLAG_PADDED):
            raise FormatError(f"unknown flag bits 0x{flags:02x}")
        if lambda_id >= len(LAMBDAS):
            raise FormatError(f"lambda index {lambda_id} out of range")
        pos = _HEADER.size

        original_size = None
        if flags & FLAG_PADDED:
            if len(data) < pos + _SIZE.size:
                raise FormatError("truncated original-size field")
            original_size = _SIZE.unpack_from(data, pos)
            pos += _SIZE.size
            if not (0 < original_size[0] <= width and 0 < original_size[1] <= height):
                raise FormatError(f"original size {original_size} exceeds coded size {width}x{height}")

        payloads = []
        for name in SUBSTREAMS:
            if len(data) < pos + _LENGTH.size:
                raise FormatError(f"truncated length of substream {name}")
            (length,) = _LENGTH.unpack_from(data, pos)
            pos += _LENGTH.size
            if pos + length > len(data):
                raise FormatError(f"substream {name} length {length} runs past the end of the data")
            payloads.append(data[pos:pos + length])
            pos += length
        if pos != len(data):
            raise FormatError(f"{len(data) - pos} trailing bytes after the last substream")

        return cls(width=width, height=height, n_y=n_y, n_uv=n_uv, lambda_id=lambda_id,
                   conditional=bool(flags & FLAG_CONDITIONAL), original_size=original_size,
                   z_y=payloads[0], y_y=payloads[1], z_uv=payloads[2], y_uv=payloads[3], version=version)


def serialize(bs: Bitstream) -> bytes:
    return bs.serialize()


def parse(data: bytes) -> Bitstream:
    return Bitstream.parse(data)
