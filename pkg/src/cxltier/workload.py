"""Workload specs, synthetic content generators, and trace file parsing.

Synthetic page contents are mixtures of 64-byte line kinds, drawn per line:

  ZERO_HEAVY  60% zero, 25% integer-patterned, 15% random
  INTEGER     20% zero, 70% integer-patterned, 10% random
  TEXTLIKE    35% zero, 65% ASCII text
  RANDOM      100% random

Integer-patterned lines are repeated words or base+delta arrays (1/2/4-byte
deltas over 64-bit words, or 1-byte deltas over 32-bit words) and compress
under the line codec; text lines do not, which keeps TEXTLIKE honest about
line-granular compression of string data.  All draws come from the seeded
generator in cxltier.rng, so corpora and op streams are reproducible.

Trace files are UTF-8 text, one op per line: ``ordinal,op,page_id,line_index``
with op one of R, W (page-granular: touching a demoted page promotes it) or
RL, WL (line-granular: demoted pages are accessed over the CXL data path).
``#`` starts a comment line.
"""

from __future__ import annotations

import bisect
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import TraceParseError
from .rng import Xoshiro256StarStar, derive_seed

LINE_BYTES = 64
LINES_PER_PAGE = 64
PAGE_BYTES = 4096

TRACE_OPS = ("R", "W", "RL", "WL")


class WorkloadKind(Enum):
    UNIFORM = "uniform"
    ZIPFIAN = "zipfian"
    SEQUENTIAL = "sequential"
    TRACE = "trace"


class ContentProfile(Enum):
    ZERO_HEAVY = "zero_heavy"
    INTEGER = "integer"
    TEXTLIKE = "textlike"
    RANDOM = "random"


# (zero, integer, text, random) line fractions per profile.
PROFILE_MIX: dict[ContentProfile, tuple[float, float, float, float]] = {
    ContentProfile.ZERO_HEAVY: (0.60, 0.25, 0.00, 0.15),
    ContentProfile.INTEGER: (0.20, 0.70, 0.00, 0.10),
    ContentProfile.TEXTLIKE: (0.35, 0.00, 0.65, 0.00),
    ContentProfile.RANDOM: (0.00, 0.00, 0.00, 1.00),
}


@dataclass(frozen=True)
class TraceOp:
    op: str
    page_id: int
    line_index: int


@dataclass(frozen=True)
class WorkloadSpec:
    kind: WorkloadKind = WorkloadKind.ZIPFIAN
    page_count: int = 256
    op_count: int = 10000
    write_fraction: float = 0.2
    zipf_s: float = 1.1
    seed: int = 1
    content_profile: ContentProfile = ContentProfile.ZERO_HEAVY
    trace_ops: tuple[TraceOp, ...] | None = None

    def validate(self) -> None:
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ValueError(f"write_fraction must be in [0, 1], got {self.write_fraction}")
        if self.page_count < 1:
            raise ValueError(f"page_count must be >= 1, got {self.page_count}")
        if self.op_count < 0:
            raise ValueError(f"op_count must be >= 0, got {self.op_count}")
        if self.kind is WorkloadKind.ZIPFIAN and self.zipf_s <= 0:
            raise ValueError(f"zipf_s must be > 0 for zipfian workloads, got {self.zipf_s}")
        if self.kind is WorkloadKind.TRACE and self.trace_ops is None:
            raise ValueError("trace workloads need trace_ops (use load_trace)")


# -- line and page generation ---------------------------------------------

_M64 = (1 << 64) - 1
_M32 = 0xFFFFFFFF
_TEXT_BYTES = b"etaoin shrdlucmfwypvbgkqjxz ETAOIN,.;:'\"!?-0123456789 \t"


def _integer_line(rng: Xoshiro256StarStar) -> bytes:
    # Word 0 carries the base itself so the line lands in the named class.
    kind = rng.below(4)
    if kind == 0:  # repeated 64-bit word
        return rng.next_u64().to_bytes(8, "little") * 8
    if kind == 1:  # u64 base + 1-byte deltas
        base = rng.next_u64()
        words = [base] + [(base + rng.below(256) - 128) & _M64 for _ in range(7)]
        return struct.pack("<8Q", *words)
    if kind == 2:  # u64 base + 2-byte deltas
        base = rng.next_u64()
        words = [base] + [(base + rng.below(65536) - 32768) & _M64 for _ in range(7)]
        return struct.pack("<8Q", *words)
    base = rng.below(1 << 32)  # u32 base + 1-byte deltas
    dwords = [base] + [(base + rng.below(256) - 128) & _M32 for _ in range(15)]
    return struct.pack("<16I", *dwords)


def _text_line(rng: Xoshiro256StarStar) -> bytes:
    n = len(_TEXT_BYTES)
    return bytes(_TEXT_BYTES[b % n] for b in rng.bytes(LINE_BYTES))


def generate_line(profile: ContentProfile, rng: Xoshiro256StarStar) -> bytes:
    """Draw one 64-byte line from the profile mixture."""
    zero, integer, text, _ = PROFILE_MIX[profile]
    u = rng.float01()
    if u < zero:
        return b"\x00" * LINE_BYTES
    if u < zero + integer:
        return _integer_line(rng)
    if u < zero + integer + text:
        return _text_line(rng)
    return rng.bytes(LINE_BYTES)


def generate_page(profile: ContentProfile, rng: Xoshiro256StarStar) -> bytes:
    return b"".join(generate_line(profile, rng) for _ in range(LINES_PER_PAGE))


def page_content_rng(seed: int, page_id: int) -> Xoshiro256StarStar:
    """Per-page content stream, decoupled from the op stream."""
    return Xoshiro256StarStar(derive_seed(seed, 0x70616765, page_id))


def profile_corpus(profile: ContentProfile, n_pages: int, seed: int) -> bytes:
    """One application dump: n_pages of profile-mixed content."""
    tag = int.from_bytes(profile.value.encode("ascii")[:8], "little")
    rng = Xoshiro256StarStar(derive_seed(seed, 0x636F7270, tag))
    return b"".join(generate_page(profile, rng) for _ in range(n_pages))


def write_profile_corpus(directory: str | Path, n_pages: int, seed: int,
                         profiles: list[ContentProfile] | None = None) -> list[Path]:
    """Materialize one dump file per profile; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for profile in profiles or list(ContentProfile):
        path = directory / f"{profile.value}.bin"
        path.write_bytes(profile_corpus(profile, n_pages, seed))
        written.append(path)
    return written


# -- zipf sampling -----------------------------------------------------------


class ZipfSampler:
    """Inverse-CDF sampling of ranks 1..n with weight 1/rank^s; page = rank - 1."""

    def __init__(self, n: int, s: float):
        weights = [1.0 / (rank ** s) for rank in range(1, n + 1)]
        total = 0.0
        self.cdf = []
        for w in weights:
            total += w
            self.cdf.append(total)
        self.total = total

    def sample(self, rng: Xoshiro256StarStar) -> int:
        u = rng.float01() * self.total
        return bisect.bisect_left(self.cdf, u)


# -- trace files -----------------------------------------------------------


def load_trace(path: str | Path, *, seed: int = 1,
               content_profile: ContentProfile = ContentProfile.ZERO_HEAVY) -> WorkloadSpec:
    """Parse a trace file into a replayable TRACE workload."""
    ops: list[TraceOp] = []
    max_page = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 4:
                raise TraceParseError(
                    f"expected 'ordinal,op,page_id,line_index', got {text!r}", lineno
                )
            ordinal_s, op, page_s, line_s = parts
            if op not in TRACE_OPS:
                raise TraceParseError(f"bad op token {op!r}", lineno)
            try:
                ordinal = int(ordinal_s)
                page_id = int(page_s)
                line_index = int(line_s)
            except ValueError as exc:
                raise TraceParseError(str(exc), lineno) from None
            if ordinal < 0 or page_id < 0:
                raise TraceParseError("ordinal and page_id must be nonnegative", lineno)
            if not 0 <= line_index < LINES_PER_PAGE:
                raise TraceParseError(
                    f"line_index must be 0..{LINES_PER_PAGE - 1}, got {line_index}", lineno
                )
            ops.append(TraceOp(op, page_id, line_index))
            max_page = max(max_page, page_id)

    return WorkloadSpec(
        kind=WorkloadKind.TRACE,
        page_count=max_page + 1,
        op_count=len(ops),
        write_fraction=0.0,
        seed=seed,
        content_profile=content_profile,
        trace_ops=tuple(ops),
    )
