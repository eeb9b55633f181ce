#!/usr/bin/env python3
"""Regenerate the committed golden-vector files under tests/vectors/.

Line vectors pin the cache-line codec's on-disk encoding: each NNN.raw is a
64-byte line, NNN.pay its frozen payload, and index.json records the expected
scheme and size class.  LZ4 vectors are (raw, payload) pairs produced by the
reference C library (liblz4) for interoperability checks; the index records
the library version used.

Run from the repository root:  python scripts/make_vectors.py
"""

from __future__ import annotations

import ctypes
import json
import struct
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from cxltier.linecodec import compress_line  # noqa: E402
from cxltier.rng import Xoshiro256StarStar, derive_seed  # noqa: E402
from cxltier.workload import ContentProfile, generate_page  # noqa: E402


def _structured_lines() -> list[bytes]:
    lines = [
        b"\x00" * 64,                                  # Z
        struct.pack("<Q", 0x0000000000000007) * 8,     # R
        struct.pack("<Q", 0xFFFFFFFFFFFFFFFF) * 8,     # R, all-ones
        struct.pack("<8Q", *range(1000, 1008)),        # B8D1 ascending
        struct.pack("<8Q", *[(2**64 - 2 + i) % 2**64 for i in range(8)]),  # B8D1 wrap
        struct.pack("<8Q", *[10_000 + 300 * i for i in range(8)]),         # B8D2
        struct.pack("<8Q", *[(1 << 40) + (i * 65536) for i in range(8)]),  # B8D4
        struct.pack("<16I", *[50_000 + i for i in range(16)]),             # B4D1
        struct.pack("<16I", *[(2**32 - 5 + 3 * i) % 2**32 for i in range(16)]),  # B4D1 wrap
        struct.pack("<8Q", 0, *[1 << 63] * 7),         # extreme deltas -> RAW-ish
        bytes(range(64)),                              # counting bytes
        b"\xff" * 64,                                  # R (0xFF.. word repeated)
    ]
    # Boundary deltas: exactly at the signed-width edges for each delta size.
    base = 1 << 32
    lines.append(struct.pack("<8Q", base, base + 127, base - 128, base, base, base, base, base))
    lines.append(struct.pack("<8Q", base, base + 128, base, base, base, base, base, base))
    lines.append(struct.pack("<8Q", base, base + 32767, base - 32768, base, base, base, base, base))
    lines.append(struct.pack("<8Q", base, base + 32768, base, base, base, base, base, base))
    lines.append(struct.pack("<8Q", base, base + 2**31 - 1, base - 2**31, base, base, base, base, base))
    lines.append(struct.pack("<8Q", base, base + 2**31, base, base, base, base, base, base))
    return lines


def make_line_vectors(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = _structured_lines()
    rng = Xoshiro256StarStar(42)
    lines.extend(rng.bytes(64) for _ in range(16))  # incompressible seed-42 vectors
    mixed = Xoshiro256StarStar(derive_seed(7, 0x6C696E65))
    for profile in ContentProfile:
        page = generate_page(profile, mixed)
        lines.extend(page[i * 64:(i + 1) * 64] for i in (0, 17, 42))

    index = []
    for i, raw in enumerate(lines):
        comp = compress_line(raw)
        stem = f"{i:03d}"
        (out_dir / f"{stem}.raw").write_bytes(raw)
        (out_dir / f"{stem}.pay").write_bytes(comp.payload)
        index.append({"stem": stem, "scheme": comp.scheme.name, "size_class": comp.size_class})
    (out_dir / "index.json").write_text(json.dumps(index, indent=1) + "\n")
    print(f"wrote {len(lines)} line vectors to {out_dir}")


def make_lz4_vectors(out_dir: Path) -> None:
    lib = ctypes.CDLL("liblz4.so.1")
    lib.LZ4_compressBound.restype = ctypes.c_int
    lib.LZ4_compress_default.restype = ctypes.c_int
    lib.LZ4_versionNumber.restype = ctypes.c_int

    def ref_compress(data: bytes) -> bytes:
        bound = lib.LZ4_compressBound(len(data))
        dst = ctypes.create_string_buffer(bound)
        n = lib.LZ4_compress_default(data, dst, len(data), bound)
        assert n > 0
        return dst.raw[:n]

    out_dir.mkdir(parents=True, exist_ok=True)
    rng = Xoshiro256StarStar(derive_seed(42, 0x6C7A34))
    text = b"the quick brown fox jumps over the lazy dog. " * 100
    blocks: list[bytes] = [
        b"\x00" * 4096,
        b"\xaa" * 4096,
        bytes(range(256)) * 16,
        text[:4096],
        b"\x00" * 1024,
        bytes(range(64)) * 16,
    ]
    while len(blocks) < 80:
        kind = len(blocks) % 4
        if kind == 0:
            blocks.append(rng.bytes(4096))
        elif kind == 1:
            blocks.append(rng.bytes(128) * 32)
        elif kind == 2:
            blocks.append(rng.bytes(2048) + b"\x00" * 2048)
        else:
            profile = list(ContentProfile)[len(blocks) % len(ContentProfile)]
            blocks.append(generate_page(profile, rng))
    while len(blocks) < 100:
        blocks.append(rng.bytes(1024) if len(blocks) % 2 else rng.bytes(512) * 2)

    index = []
    for i, raw in enumerate(blocks):
        logical = len(raw)
        assert logical in (1024, 4096)
        payload = ref_compress(raw)
        stem = f"{i:03d}"
        (out_dir / f"{stem}.raw").write_bytes(raw)
        (out_dir / f"{stem}.lz4").write_bytes(payload)
        index.append({"stem": stem, "logical_len": logical, "payload_len": len(payload)})
    meta = {"reference_version": lib.LZ4_versionNumber(), "vectors": index}
    (out_dir / "index.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {len(blocks)} LZ4 vectors to {out_dir} "
          f"(liblz4 version {meta['reference_version']})")


if __name__ == "__main__":
    vectors = ROOT / "tests" / "vectors"
    make_line_vectors(vectors / "lines")
    make_lz4_vectors(vectors / "lz4")
