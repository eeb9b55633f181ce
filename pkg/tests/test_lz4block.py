"""LZ4 block codec: round trips, strict decoding, reference interoperability."""

import json
import random

import pytest

from cxltier.errors import CodecFormatError
from cxltier.lz4block import (
    CompressedBlock,
    compress_block,
    decompress_block,
    decompress_into,
    worst_case_bound,
)


def _sample_blocks(count, size, seed):
    rnd = random.Random(seed)
    blocks = [
        b"\x00" * size,
        b"\x55" * size,
        (b"abcd" * (size // 4)),
        bytes(range(256)) * (size // 256),
        rnd.randbytes(size),
    ]
    while len(blocks) < count:
        kind = len(blocks) % 4
        if kind == 0:
            blocks.append(rnd.randbytes(size))
        elif kind == 1:
            half = rnd.randbytes(size // 2)
            blocks.append(half + half)
        elif kind == 2:
            blocks.append(rnd.randbytes(64) * (size // 64))
        else:
            blocks.append(rnd.randbytes(size // 4) + b"\x00" * (3 * size // 4))
    return blocks


def test_zero_page_compresses_small():
    blk = compress_block(b"\x00" * 4096, 4096)
    assert blk.compressed_len < 64
    assert decompress_block(blk) == b"\x00" * 4096


def test_zero_page_size_agrees_with_reference(reference_lz4):
    blk = compress_block(b"\x00" * 4096, 4096)
    ref_len = len(reference_lz4.compress(b"\x00" * 4096))
    assert ref_len < 64  # the reference lands in the same size class
    assert abs(blk.compressed_len - ref_len) <= 8


def test_round_trip_both_block_sizes():
    for size in (1024, 4096):
        for data in _sample_blocks(200, size, seed=size):
            blk = compress_block(data, size)
            assert blk.compressed_len <= worst_case_bound(size)
            assert decompress_block(blk) == data


def test_incompressible_input_expands_within_bound():
    data = random.Random(42).randbytes(4096)
    blk = compress_block(data, 4096)
    assert 4096 <= blk.compressed_len <= worst_case_bound(4096)
    assert decompress_block(blk) == data


def test_wrong_length_rejected():
    with pytest.raises(ValueError):
        compress_block(b"\x00" * 4095, 4096)
    with pytest.raises(ValueError):
        compress_block(b"\x00" * 2048, 2048)


def test_determinism():
    data = random.Random(3).randbytes(4096)
    a = compress_block(data, 4096).payload
    b = compress_block(data, 4096).payload
    assert a == b


def test_truncated_payload_errors_with_offset():
    blk = compress_block(bytes(range(256)) * 16, 4096)
    for cut in (1, 3, len(blk.payload) // 2):
        with pytest.raises(CodecFormatError) as err:
            decompress_into(blk.payload[:-cut], 4096)
        assert err.value.offset is not None


def test_bad_offset_rejected():
    # Token 0x1F: 1 literal, then a match with offset 0 (invalid).
    payload = bytes([0x1F, 0x41, 0x00, 0x00, 0x00])
    with pytest.raises(CodecFormatError):
        decompress_into(payload, 1024)
    # Offset pointing before the start of the block.
    payload = bytes([0x1F, 0x41, 0x09, 0x00, 0x00])
    with pytest.raises(CodecFormatError):
        decompress_into(payload, 1024)


def test_output_length_mismatch_rejected():
    short = bytes([0x20, 0x41, 0x42])  # two literals, then end
    with pytest.raises(CodecFormatError):
        decompress_into(short, 1024)


def test_final_sequence_must_be_literal_only():
    # 4 literals then a match that lands exactly at the end of the stream.
    payload = bytes([0x40, 0x41, 0x42, 0x43, 0x44, 0x04, 0x00])
    with pytest.raises(CodecFormatError):
        decompress_into(payload, 8)


def test_overlapping_match_copy():
    # "ab" repeated: literals "ab" + one overlapping match (offset 2).
    data = b"ab" * 512
    blk = compress_block(data, 1024)
    assert decompress_block(blk) == data
    assert blk.compressed_len < 32


def test_reference_payloads_decode_here(reference_lz4):
    rnd = random.Random(11)
    for data in _sample_blocks(60, 4096, seed=5):
        payload = reference_lz4.compress(data)
        assert decompress_into(payload, 4096) == data
    for _ in range(20):
        data = rnd.randbytes(1024)
        assert decompress_into(reference_lz4.compress(data), 1024) == data


def test_local_payloads_decode_under_reference(reference_lz4):
    for data in _sample_blocks(60, 4096, seed=6):
        blk = compress_block(data, 4096)
        assert reference_lz4.decompress(blk.payload, 4096) == data
    for data in _sample_blocks(20, 1024, seed=7):
        blk = compress_block(data, 1024)
        assert reference_lz4.decompress(blk.payload, 1024) == data


def test_golden_vector_suite(vector_dir):
    meta = json.loads((vector_dir / "lz4" / "index.json").read_text())
    vectors = meta["vectors"]
    assert len(vectors) == 100
    for entry in vectors:
        raw = (vector_dir / "lz4" / f"{entry['stem']}.raw").read_bytes()
        payload = (vector_dir / "lz4" / f"{entry['stem']}.lz4").read_bytes()
        assert len(raw) == entry["logical_len"]
        assert len(payload) == entry["payload_len"]
        assert decompress_into(payload, entry["logical_len"]) == raw


def test_compressed_block_invariants():
    data = b"\x00" * 1024
    blk = compress_block(data, 1024)
    assert isinstance(blk, CompressedBlock)
    assert blk.logical_len == 1024
    assert blk.compressed_len == len(blk.payload)
