"""Lossless 64-byte cache-line codec (format "ZLC-64").

Every 64-byte line is encoded by exactly one of seven schemes.  The scheme
tag and size class live in translation metadata, not in the payload stream,
so a payload alone is only decodable given its scheme.

Scheme payload layouts (all integers little-endian, deltas two's-complement):

  Z      0 B   all-zero line, no payload
  R      8 B   one 64-bit word repeated 8 times; payload is that word
  B8D1  16 B   base u64 + eight  1-byte deltas (delta[i] = word[i] - base mod 2^64)
  B4D1  24 B   base u32 + sixteen 1-byte deltas + 4 zero pad bytes
  B8D2  24 B   base u64 + eight  2-byte deltas
  B8D4  40 B   base u64 + eight  4-byte deltas
  RAW   64 B   verbatim line

The base is always word 0 (delta[0] is therefore 0 but still stored, which
keeps the layouts uniform).  A delta scheme applies only if every delta,
reduced modulo the word width and read as a signed two's-complement value,
fits its delta width exactly; arithmetic wraps, so e.g. base 2^64-1 with next
word 0 yields delta +1.  Decoding adds deltas back modulo the word width.

compress_line always picks the applicable scheme with the smallest payload;
ties break in the fixed order Z < R < B8D1 < B4D1 < B8D2 < B8D4 < RAW.
RAW always applies, so encoding never fails and never beats 64 bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .errors import CodecFormatError

LINE_BYTES = 64

# Charged per stored line for the scheme tag + size class kept in
# translation metadata; feeds telemetry, never the payload stream.
METADATA_OVERHEAD_BYTES = 2

SIZE_CLASSES = (0, 8, 16, 24, 32, 40, 48, 56, 64)


class Scheme(IntEnum):
    """Fixed tie-break order; lower value wins at equal payload size."""

    Z = 0
    R = 1
    B8D1 = 2
    B4D1 = 3
    B8D2 = 4
    B8D4 = 5
    RAW = 6


PAYLOAD_SIZES = {
    Scheme.Z: 0,
    Scheme.R: 8,
    Scheme.B8D1: 16,
    Scheme.B4D1: 24,
    Scheme.B8D2: 24,
    Scheme.B8D4: 40,
    Scheme.RAW: 64,
}


def size_class_for(payload_len: int) -> int:
    """Smallest size class that holds payload_len bytes."""
    for cls in SIZE_CLASSES:
        if cls >= payload_len:
            return cls
    raise ValueError(f"payload of {payload_len} bytes exceeds the largest class")


@dataclass(frozen=True)
class CompressedLine:
    scheme: Scheme
    size_class: int
    payload: bytes


_ZERO_LINE = b"\x00" * LINE_BYTES
_U64X8 = struct.Struct("<8Q")
_U32X16 = struct.Struct("<16I")
_U64 = struct.Struct("<Q")
_U32 = struct.Struct("<I")
_U16X8 = struct.Struct("<8H")
_U32X8 = struct.Struct("<8I")

_Z_LINE = CompressedLine(Scheme.Z, 0, b"")
_M64 = (1 << 64) - 1
_M32 = 0xFFFFFFFF


def compress_line(line: bytes) -> CompressedLine:
    """Encode one 64-byte line; total over all inputs, deterministic."""
    if len(line) != LINE_BYTES:
        raise ValueError(f"cache line must be {LINE_BYTES} bytes, got {len(line)}")
    if line == _ZERO_LINE:
        return _Z_LINE

    w0, w1, w2, w3, w4, w5, w6, w7 = _U64X8.unpack(line)
    if w0 == w1 == w2 == w3 == w4 == w5 == w6 == w7:
        return CompressedLine(Scheme.R, 8, line[:8])

    d1 = (w1 - w0) & _M64
    d2 = (w2 - w0) & _M64
    d3 = (w3 - w0) & _M64
    d4 = (w4 - w0) & _M64
    d5 = (w5 - w0) & _M64
    d6 = (w6 - w0) & _M64
    d7 = (w7 - w0) & _M64

    if (
        (d1 + 0x80) & _M64 < 0x100
        and (d2 + 0x80) & _M64 < 0x100
        and (d3 + 0x80) & _M64 < 0x100
        and (d4 + 0x80) & _M64 < 0x100
        and (d5 + 0x80) & _M64 < 0x100
        and (d6 + 0x80) & _M64 < 0x100
        and (d7 + 0x80) & _M64 < 0x100
    ):
        payload = line[:8] + bytes(
            (0, d1 & 0xFF, d2 & 0xFF, d3 & 0xFF, d4 & 0xFF, d5 & 0xFF, d6 & 0xFF, d7 & 0xFF)
        )
        return CompressedLine(Scheme.B8D1, 16, payload)

    dwords = _U32X16.unpack(line)
    b = dwords[0]
    for dw in dwords:
        if (dw - b + 0x80) & _M32 >= 0x100:
            break
    else:
        deltas = bytes((dw - b) & 0xFF for dw in dwords)
        return CompressedLine(Scheme.B4D1, 24, line[:4] + deltas + b"\x00" * 4)

    if (
        (d1 + 0x8000) & _M64 < 0x10000
        and (d2 + 0x8000) & _M64 < 0x10000
        and (d3 + 0x8000) & _M64 < 0x10000
        and (d4 + 0x8000) & _M64 < 0x10000
        and (d5 + 0x8000) & _M64 < 0x10000
        and (d6 + 0x8000) & _M64 < 0x10000
        and (d7 + 0x8000) & _M64 < 0x10000
    ):
        payload = line[:8] + _U16X8.pack(
            0, d1 & 0xFFFF, d2 & 0xFFFF, d3 & 0xFFFF, d4 & 0xFFFF,
            d5 & 0xFFFF, d6 & 0xFFFF, d7 & 0xFFFF,
        )
        return CompressedLine(Scheme.B8D2, 24, payload)

    if (
        (d1 + 0x80000000) & _M64 < 0x100000000
        and (d2 + 0x80000000) & _M64 < 0x100000000
        and (d3 + 0x80000000) & _M64 < 0x100000000
        and (d4 + 0x80000000) & _M64 < 0x100000000
        and (d5 + 0x80000000) & _M64 < 0x100000000
        and (d6 + 0x80000000) & _M64 < 0x100000000
        and (d7 + 0x80000000) & _M64 < 0x100000000
    ):
        payload = line[:8] + _U32X8.pack(
            0, d1 & _M32, d2 & _M32, d3 & _M32, d4 & _M32,
            d5 & _M32, d6 & _M32, d7 & _M32,
        )
        return CompressedLine(Scheme.B8D4, 40, payload)

    return CompressedLine(Scheme.RAW, 64, bytes(line))


def decompress_line(c: CompressedLine) -> bytes:
    """Exact inverse of compress_line on its image."""
    expected = PAYLOAD_SIZES[c.scheme]
    if len(c.payload) != expected:
        raise CodecFormatError(
            f"scheme {c.scheme.name} requires a {expected}-byte payload, "
            f"got {len(c.payload)}"
        )
    if c.size_class != size_class_for(expected):
        raise CodecFormatError(
            f"scheme {c.scheme.name} payload belongs in class "
            f"{size_class_for(expected)}, got {c.size_class}"
        )

    s = c.scheme
    p = c.payload
    if s is Scheme.Z:
        return _ZERO_LINE
    if s is Scheme.R:
        return p * 8
    if s is Scheme.RAW:
        return p
    if s is Scheme.B8D1:
        (base,) = _U64.unpack_from(p, 0)
        words = [(base + _signed(p[8 + i], 8)) & _M64 for i in range(8)]
        return _U64X8.pack(*words)
    if s is Scheme.B8D2:
        (base,) = _U64.unpack_from(p, 0)
        raw = _U16X8.unpack_from(p, 8)
        words = [(base + _signed(d, 16)) & _M64 for d in raw]
        return _U64X8.pack(*words)
    if s is Scheme.B8D4:
        (base,) = _U64.unpack_from(p, 0)
        raw = _U32X8.unpack_from(p, 8)
        words = [(base + _signed(d, 32)) & _M64 for d in raw]
        return _U64X8.pack(*words)
    if s is Scheme.B4D1:
        if p[20:24] != b"\x00\x00\x00\x00":
            raise CodecFormatError("B4D1 pad bytes must be zero", offset=20)
        (base,) = _U32.unpack_from(p, 0)
        dwords = [(base + _signed(p[4 + i], 8)) & _M32 for i in range(16)]
        return _U32X16.pack(*dwords)
    raise CodecFormatError(f"unknown scheme {c.scheme!r}")


def _signed(value: int, bits: int) -> int:
    half = 1 << (bits - 1)
    return value - (1 << bits) if value >= half else value


def line_ratio(c: CompressedLine) -> float:
    """Compression ratio of one line with metadata overhead charged."""
    return LINE_BYTES / (c.size_class + METADATA_OVERHEAD_BYTES)
