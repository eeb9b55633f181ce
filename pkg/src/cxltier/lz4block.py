"""LZ4 block-format codec for 1 KiB / 4 KiB page granularity.

Implements the plain block format only: token, LSIC lengths, 2-byte
little-endian match offsets, minimum match of 4.  No frame container, no
checksums.  The encoder is a greedy single-pass matcher with the standard
skip-strength acceleration, and honors the format's end conditions (last
sequence literal-only, last 5 bytes literal, no match starting within the
final 12 bytes), so its output is decodable by any conforming decoder.

The decoder is strict: bad offsets, truncated streams, and output
over/underruns raise CodecFormatError with the payload offset of the
offending sequence, and no partial output escapes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CodecFormatError

BLOCK_SIZES = (1024, 4096)

MIN_MATCH = 4
_LAST_LITERALS = 5   # final bytes must be literals
_MFLIMIT = 12        # no match may start closer than this to the end
_MAX_OFFSET = 65535
_HASH_LOG = 12
_HASH_MASK = (1 << _HASH_LOG) - 1
_SKIP_TRIGGER = 6    # acceleration: probe step grows every 2^6 misses


def worst_case_bound(logical_len: int) -> int:
    """Upper bound on payload size for any input of logical_len bytes."""
    return logical_len + logical_len // 255 + 16


@dataclass(frozen=True)
class CompressedBlock:
    logical_len: int
    payload: bytes

    @property
    def compressed_len(self) -> int:
        return len(self.payload)


def compress_block(data: bytes, logical_len: int | None = None) -> CompressedBlock:
    """Compress one block; deterministic for a fixed input."""
    if logical_len is None:
        logical_len = len(data)
    if logical_len not in BLOCK_SIZES:
        raise ValueError(f"block length must be one of {BLOCK_SIZES}, got {logical_len}")
    if len(data) != logical_len:
        raise ValueError(f"expected {logical_len} bytes of input, got {len(data)}")
    payload = _compress(bytes(data))
    assert len(payload) <= worst_case_bound(logical_len)
    return CompressedBlock(logical_len, payload)


def decompress_block(b: CompressedBlock) -> bytes:
    """Decode a block payload back to exactly logical_len bytes."""
    if b.logical_len not in BLOCK_SIZES:
        raise ValueError(f"block length must be one of {BLOCK_SIZES}, got {b.logical_len}")
    return decompress_into(b.payload, b.logical_len)


def _hash4(word: int) -> int:
    return ((word * 2654435761) >> (32 - _HASH_LOG)) & _HASH_MASK


def _compress(src: bytes) -> bytes:
    n = len(src)
    out = bytearray()
    # Inputs shorter than the match window are emitted as pure literals.
    if n < _MFLIMIT + 1:
        _emit_last_literals(out, src, 0, n)
        return bytes(out)

    table = [-1] * (1 << _HASH_LOG)
    mflimit = n - _MFLIMIT
    matchlimit = n - _LAST_LITERALS

    anchor = 0
    ip = 0
    table[_hash4(int.from_bytes(src[0:4], "little"))] = 0
    ip = 1

    while True:
        # Search for the next match, accelerating through incompressible runs.
        pos = ip
        search_count = 1 << _SKIP_TRIGGER
        ref = -1
        while True:
            if pos > mflimit:
                _emit_last_literals(out, src, anchor, n)
                return bytes(out)
            h = _hash4(int.from_bytes(src[pos:pos + 4], "little"))
            cand = table[h]
            table[h] = pos
            if cand >= 0 and pos - cand <= _MAX_OFFSET and src[cand:cand + 4] == src[pos:pos + 4]:
                ref = cand
                break
            pos += search_count >> _SKIP_TRIGGER
            search_count += 1

        # Extend backward over bytes that also match.
        while pos > anchor and ref > 0 and src[pos - 1] == src[ref - 1]:
            pos -= 1
            ref -= 1

        # Extend forward; chunked compares keep long runs cheap.
        mlen = MIN_MATCH
        step = 32
        while pos + mlen + step <= matchlimit and src[pos + mlen:pos + mlen + step] == src[ref + mlen:ref + mlen + step]:
            mlen += step
            step = min(step * 2, 4096)
        while pos + mlen < matchlimit and src[pos + mlen] == src[ref + mlen]:
            mlen += 1

        _emit_sequence(out, src, anchor, pos, pos - ref, mlen)
        ip = pos + mlen
        anchor = ip
        if ip > mflimit:
            _emit_last_literals(out, src, anchor, n)
            return bytes(out)
        table[_hash4(int.from_bytes(src[ip - 2:ip + 2], "little"))] = ip - 2


def _emit_sequence(out: bytearray, src: bytes, lit_start: int, lit_end: int, offset: int, mlen: int) -> None:
    lit_len = lit_end - lit_start
    ml = mlen - MIN_MATCH
    token_lit = 15 if lit_len >= 15 else lit_len
    token_ml = 15 if ml >= 15 else ml
    out.append((token_lit << 4) | token_ml)
    if lit_len >= 15:
        _emit_lsic(out, lit_len - 15)
    out += src[lit_start:lit_end]
    out.append(offset & 0xFF)
    out.append(offset >> 8)
    if ml >= 15:
        _emit_lsic(out, ml - 15)


def _emit_last_literals(out: bytearray, src: bytes, start: int, end: int) -> None:
    lit_len = end - start
    token_lit = 15 if lit_len >= 15 else lit_len
    out.append(token_lit << 4)
    if lit_len >= 15:
        _emit_lsic(out, lit_len - 15)
    out += src[start:end]


def _emit_lsic(out: bytearray, value: int) -> None:
    while value >= 255:
        out.append(255)
        value -= 255
    out.append(value)


def decompress_into(payload: bytes, logical_len: int) -> bytes:
    """Strict block-format decoder; interoperable with reference payloads."""
    src = payload
    n = len(src)
    out = bytearray()
    ip = 0

    while True:
        seq_start = ip
        if ip >= n:
            raise CodecFormatError("payload ends without a literal-only final sequence", offset=seq_start)
        token = src[ip]
        ip += 1

        lit_len = token >> 4
        if lit_len == 15:
            lit_len, ip = _read_lsic(src, ip, lit_len, seq_start)
        if ip + lit_len > n:
            raise CodecFormatError("literal run overruns payload", offset=seq_start)
        out += src[ip:ip + lit_len]
        ip += lit_len
        if len(out) > logical_len:
            raise CodecFormatError("output overrun during literal copy", offset=seq_start)

        if ip == n:
            # Literal-only final sequence: its match field must be absent.
            if token & 0x0F != 0:
                raise CodecFormatError("final sequence must not encode a match", offset=seq_start)
            if len(out) != logical_len:
                raise CodecFormatError(
                    f"output underrun: produced {len(out)} of {logical_len} bytes",
                    offset=seq_start,
                )
            return bytes(out)

        if ip + 2 > n:
            raise CodecFormatError("truncated match offset", offset=seq_start)
        offset = src[ip] | (src[ip + 1] << 8)
        ip += 2
        if offset == 0:
            raise CodecFormatError("match offset of zero is invalid", offset=seq_start)
        if offset > len(out):
            raise CodecFormatError(
                f"match offset {offset} reaches before block start", offset=seq_start
            )

        mlen = token & 0x0F
        if mlen == 15:
            mlen, ip = _read_lsic(src, ip, mlen, seq_start)
        mlen += MIN_MATCH
        if len(out) + mlen > logical_len:
            raise CodecFormatError("output overrun during match copy", offset=seq_start)

        start = len(out) - offset
        if offset >= mlen:
            out += out[start:start + mlen]
        else:
            # Overlapping match: the offset-sized tail repeats.
            pattern = bytes(out[start:])
            reps = mlen // offset + 1
            out += (pattern * reps)[:mlen]


def _read_lsic(src: bytes, ip: int, base: int, seq_start: int) -> tuple[int, int]:
    total = base
    while True:
        if ip >= len(src):
            raise CodecFormatError("truncated length field", offset=seq_start)
        byte = src[ip]
        ip += 1
        total += byte
        if byte != 255:
            return total, ip
