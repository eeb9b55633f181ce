"""Compressed-tier memory manager: slab allocation, translation metadata, compaction.

Physical layout: the arena is one contiguous byte range.  Line payloads live
in 4096-byte sectors assigned from the bottom, each sector dedicated to one
size class (slab style).  Block-mode LZ4 extents are packed byte-granular
from the top.  Freed space is marked dead and reclaimed only by compaction,
which repacks every live payload deterministically (sorted by page id) and
rewrites all translation offsets.

Accounting invariants maintained at all times:
  free + live + dead + metadata == capacity
  used == live + metadata
Metadata is charged at 2 bytes per live line and 8 bytes per live block
extent.  Page records themselves model translation-structure entries and are
not charged against arena capacity (see debug_dump for their tally).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import (
    CapacityExhaustedError,
    PageNotFoundError,
    StateError,
    UnsupportedGranularityError,
)
from .linecodec import (
    LINE_BYTES,
    METADATA_OVERHEAD_BYTES,
    CompressedLine,
    Scheme,
    compress_line,
    decompress_line,
)
from . import lz4block

PAGE_BYTES = 4096
LINES_PER_PAGE = PAGE_BYTES // LINE_BYTES
SECTOR_BYTES = 4096
BLOCK_META_BYTES = 8
PAGE_RECORD_BYTES = 64  # translation-structure footprint, reported in debug dumps only

COMPACT_TRIGGER_FRAGMENTATION = 0.25
POST_COMPACTION_TARGET = 0.05
DEFAULT_COMPACTION_NS_PER_KB = 50.0


class StoreMode(Enum):
    CACHELINE = "cacheline"
    BLOCK = "block"


@dataclass(slots=True)
class LineSlot:
    scheme: Scheme
    size_class: int
    offset: int  # -1 for class-0 slots, which occupy no storage


@dataclass(slots=True)
class BlockExtent:
    compressed_len: int
    offset: int


@dataclass
class PageRecord:
    page_id: int
    mode: StoreMode
    lines: list[LineSlot] | None = None
    block: BlockExtent | None = None
    logical_len: int = PAGE_BYTES


@dataclass(frozen=True)
class StoreReceipt:
    physical_bytes_used: int


@dataclass(frozen=True)
class WriteOutcome:
    relocated: bool
    delta_physical_bytes: int


@dataclass(frozen=True)
class CompactionReport:
    bytes_reclaimed: int
    slots_moved: int
    duration_modeled_ns: float


@dataclass(frozen=True)
class TierTelemetry:
    logical_bytes: int
    physical_bytes: int
    compression_ratio: float
    expansion_factor: float
    fragmentation: float
    live_pages: int


class _Arena:
    """Byte storage plus the slab/extent allocation state."""

    def __init__(self, capacity: int):
        if capacity < 2 * SECTOR_BYTES:
            raise ValueError(f"capacity must be at least {2 * SECTOR_BYTES} bytes")
        self.capacity = capacity
        self.storage = bytearray(capacity)
        self.reset_allocation()
        self.live_line_bytes = 0
        self.dead_line_bytes = 0
        self.live_block_bytes = 0
        self.dead_block_bytes = 0
        self.metadata_bytes = 0

    def reset_allocation(self) -> None:
        self.next_sector = 0
        # class -> [next free offset within open sector, slots remaining]
        self.open_sectors: dict[int, list[int]] = {}
        self.block_used = 0

    # -- capacity queries -------------------------------------------------
    #
    # Translation metadata is charged against capacity, so the slab frontier,
    # the block region, and (current + incoming) metadata must jointly fit.

    def _sectors_available(self, extra_metadata: int = 0) -> int:
        top = self.capacity - self.block_used - self.metadata_bytes - extra_metadata
        return max(0, (top - self.next_sector * SECTOR_BYTES) // SECTOR_BYTES)

    def can_place_lines(self, class_counts: dict[int, int], extra_metadata: int = 0) -> bool:
        sectors_needed = 0
        for cls, count in class_counts.items():
            if cls == 0:
                continue
            open_state = self.open_sectors.get(cls)
            remaining = open_state[1] if open_state else 0
            overflow = count - remaining
            if overflow > 0:
                per_sector = SECTOR_BYTES // cls
                sectors_needed += -(-overflow // per_sector)
        return sectors_needed <= self._sectors_available(extra_metadata)

    def can_place_block(self, nbytes: int, extra_metadata: int = 0) -> bool:
        used = (
            self.next_sector * SECTOR_BYTES
            + self.block_used
            + self.metadata_bytes
            + extra_metadata
        )
        return used + nbytes <= self.capacity

    # -- allocation (callers must check can_place_* first) ----------------

    def alloc_line(self, cls: int) -> int:
        if cls == 0:
            return -1
        open_state = self.open_sectors.get(cls)
        if open_state is None or open_state[1] == 0:
            base = self.next_sector * SECTOR_BYTES
            if base + SECTOR_BYTES > self.capacity - self.block_used - self.metadata_bytes:
                raise CapacityExhaustedError("no sector available for line slot")
            self.next_sector += 1
            open_state = [base, SECTOR_BYTES // cls]
            self.open_sectors[cls] = open_state
        offset = open_state[0]
        open_state[0] += cls
        open_state[1] -= 1
        self.live_line_bytes += cls
        return offset

    def free_line(self, cls: int) -> None:
        if cls == 0:
            return
        self.live_line_bytes -= cls
        self.dead_line_bytes += cls

    def alloc_block(self, nbytes: int) -> int:
        if not self.can_place_block(nbytes):
            raise CapacityExhaustedError("no room for block extent")
        self.block_used += nbytes
        self.live_block_bytes += nbytes
        return self.capacity - self.block_used

    def free_block(self, nbytes: int) -> None:
        self.live_block_bytes -= nbytes
        self.dead_block_bytes += nbytes

    # -- accounting --------------------------------------------------------

    @property
    def live_bytes(self) -> int:
        return self.live_line_bytes + self.live_block_bytes

    @property
    def dead_bytes(self) -> int:
        return self.dead_line_bytes + self.dead_block_bytes

    @property
    def used_bytes(self) -> int:
        return self.live_bytes + self.metadata_bytes

    @property
    def free_bytes(self) -> int:
        return self.capacity - self.live_bytes - self.dead_bytes - self.metadata_bytes

    @property
    def fragmentation(self) -> float:
        return self.dead_bytes / self.capacity


class TierStore:
    """Single-writer compressed page store with capacity telemetry.

    Callers serialize mutating operations; telemetry() and the read paths
    may interleave between mutations.
    """

    def __init__(self, capacity_bytes: int, *,
                 compact_trigger: float = COMPACT_TRIGGER_FRAGMENTATION,
                 compaction_ns_per_kb: float = DEFAULT_COMPACTION_NS_PER_KB):
        self.arena = _Arena(capacity_bytes)
        self.records: dict[int, PageRecord] = {}
        self.compact_trigger = compact_trigger
        self.compaction_ns_per_kb = compaction_ns_per_kb
        self.compaction_count = 0
        self.last_compaction: CompactionReport | None = None
        self.last_compaction_bytes_moved = 0

    @property
    def capacity_bytes(self) -> int:
        return self.arena.capacity

    # -- store / load -------------------------------------------------------

    def store_page(self, page_id: int, page: bytes, mode: StoreMode) -> StoreReceipt:
        if page_id in self.records:
            raise StateError(f"page {page_id} is already live in the compressed tier")
        if len(page) != PAGE_BYTES:
            raise ValueError(f"page must be {PAGE_BYTES} bytes, got {len(page)}")

        if mode is StoreMode.CACHELINE:
            comps = [
                compress_line(page[i * LINE_BYTES:(i + 1) * LINE_BYTES])
                for i in range(LINES_PER_PAGE)
            ]
            counts: dict[int, int] = {}
            for c in comps:
                counts[c.size_class] = counts.get(c.size_class, 0) + 1
            meta_in = LINES_PER_PAGE * METADATA_OVERHEAD_BYTES
            if not self.arena.can_place_lines(counts, meta_in):
                self.compact()
                if not self.arena.can_place_lines(counts, meta_in):
                    raise CapacityExhaustedError(
                        f"cannot place page {page_id}: line slots unavailable"
                    )
            slots = []
            for c in comps:
                off = self.arena.alloc_line(c.size_class)
                if c.size_class:
                    self.arena.storage[off:off + c.size_class] = c.payload
                slots.append(LineSlot(c.scheme, c.size_class, off))
            record = PageRecord(page_id, mode, lines=slots)
            payload_bytes = sum(s.size_class for s in slots)
            meta = LINES_PER_PAGE * METADATA_OVERHEAD_BYTES
        else:
            blk = lz4block.compress_block(page, PAGE_BYTES)
            nbytes = blk.compressed_len
            if not self.arena.can_place_block(nbytes, BLOCK_META_BYTES):
                self.compact()
                if not self.arena.can_place_block(nbytes, BLOCK_META_BYTES):
                    raise CapacityExhaustedError(
                        f"cannot place page {page_id}: block region full"
                    )
            off = self.arena.alloc_block(nbytes)
            self.arena.storage[off:off + nbytes] = blk.payload
            record = PageRecord(page_id, mode, block=BlockExtent(nbytes, off))
            payload_bytes = nbytes
            meta = BLOCK_META_BYTES

        self.arena.metadata_bytes += meta
        self.records[page_id] = record
        return StoreReceipt(physical_bytes_used=payload_bytes + meta)

    def load_page(self, page_id: int) -> bytes:
        rec = self._record(page_id)
        if rec.mode is StoreMode.CACHELINE:
            parts = []
            for slot in rec.lines:
                parts.append(decompress_line(self._line_of(slot)))
            return b"".join(parts)
        ext = rec.block
        payload = bytes(self.arena.storage[ext.offset:ext.offset + ext.compressed_len])
        return lz4block.decompress_into(payload, rec.logical_len)

    def read_line(self, page_id: int, line_index: int) -> bytes:
        rec = self._record(page_id)
        if rec.mode is not StoreMode.CACHELINE:
            raise UnsupportedGranularityError(
                f"page {page_id} is stored at block granularity"
            )
        if not 0 <= line_index < LINES_PER_PAGE:
            raise ValueError(f"line index must be 0..{LINES_PER_PAGE - 1}, got {line_index}")
        return decompress_line(self._line_of(rec.lines[line_index]))

    def write_line(self, page_id: int, line_index: int, line: bytes) -> WriteOutcome:
        rec = self._record(page_id)
        if rec.mode is not StoreMode.CACHELINE:
            raise UnsupportedGranularityError(
                f"page {page_id} is stored at block granularity"
            )
        if not 0 <= line_index < LINES_PER_PAGE:
            raise ValueError(f"line index must be 0..{LINES_PER_PAGE - 1}, got {line_index}")
        new = compress_line(line)
        slot = rec.lines[line_index]

        if new.size_class == slot.size_class:
            if new.size_class:
                self.arena.storage[slot.offset:slot.offset + new.size_class] = new.payload
            slot.scheme = new.scheme
            return WriteOutcome(relocated=False, delta_physical_bytes=0)

        if not self.arena.can_place_lines({new.size_class: 1}):
            self.compact()
            if not self.arena.can_place_lines({new.size_class: 1}):
                raise CapacityExhaustedError(
                    f"cannot grow line {line_index} of page {page_id}"
                )
        old_class = slot.size_class
        off = self.arena.alloc_line(new.size_class)
        if new.size_class:
            self.arena.storage[off:off + new.size_class] = new.payload
        self.arena.free_line(old_class)
        slot.scheme = new.scheme
        slot.size_class = new.size_class
        slot.offset = off
        self._maybe_compact()
        return WriteOutcome(relocated=True, delta_physical_bytes=new.size_class - old_class)

    def free_page(self, page_id: int) -> int:
        rec = self._record(page_id)
        if rec.mode is StoreMode.CACHELINE:
            payload_bytes = 0
            for slot in rec.lines:
                self.arena.free_line(slot.size_class)
                payload_bytes += slot.size_class
            meta = LINES_PER_PAGE * METADATA_OVERHEAD_BYTES
        else:
            self.arena.free_block(rec.block.compressed_len)
            payload_bytes = rec.block.compressed_len
            meta = BLOCK_META_BYTES
        self.arena.metadata_bytes -= meta
        del self.records[page_id]
        self._maybe_compact()
        return payload_bytes + meta

    # -- compaction ----------------------------------------------------------

    def compact(self, stall_ns_per_kb: float | None = None) -> CompactionReport:
        """Repack all live payloads; reclaims every dead byte."""
        ns_per_kb = self.compaction_ns_per_kb if stall_ns_per_kb is None else stall_ns_per_kb
        arena = self.arena
        reclaimable = arena.dead_bytes
        if reclaimable == 0:
            report = CompactionReport(0, 0, 0.0)
            self.last_compaction = report
            return report

        # Group live slots deterministically (page id, then line index) and
        # repack class by class from the bottom, block extents from the top.
        # A snapshot of the old storage sidesteps src/dst aliasing.
        by_class: dict[int, list[LineSlot]] = {}
        block_extents: list[BlockExtent] = []
        for page_id in sorted(self.records):
            rec = self.records[page_id]
            if rec.mode is StoreMode.CACHELINE:
                for slot in rec.lines:
                    if slot.size_class:
                        by_class.setdefault(slot.size_class, []).append(slot)
            else:
                block_extents.append(rec.block)

        old = bytes(arena.storage)
        storage = arena.storage
        arena.reset_allocation()
        arena.dead_line_bytes = 0
        arena.dead_block_bytes = 0

        slots_moved = 0
        bytes_moved = 0
        next_sector = 0
        for cls in sorted(by_class):
            slots = by_class[cls]
            per_sector = SECTOR_BYTES // cls
            for i, slot in enumerate(slots):
                off = (next_sector + i // per_sector) * SECTOR_BYTES + (i % per_sector) * cls
                old_off = slot.offset
                if off != old_off:
                    storage[off:off + cls] = old[old_off:old_off + cls]
                    slot.offset = off
                    slots_moved += 1
                    bytes_moved += cls
            full, rem = divmod(len(slots), per_sector)
            used = full + (1 if rem else 0)
            if rem:
                base = (next_sector + used - 1) * SECTOR_BYTES
                arena.open_sectors[cls] = [base + rem * cls, per_sector - rem]
            next_sector += used
        arena.next_sector = next_sector

        block_used = 0
        for ext in block_extents:
            block_used += ext.compressed_len
            off = arena.capacity - block_used
            if off != ext.offset:
                storage[off:off + ext.compressed_len] = old[ext.offset:ext.offset + ext.compressed_len]
                ext.offset = off
                slots_moved += 1
                bytes_moved += ext.compressed_len
        arena.block_used = block_used

        report = CompactionReport(
            bytes_reclaimed=reclaimable,
            slots_moved=slots_moved,
            duration_modeled_ns=bytes_moved / 1024 * ns_per_kb,
        )
        self.compaction_count += 1
        self.last_compaction = report
        self.last_compaction_bytes_moved = bytes_moved
        return report

    def _maybe_compact(self) -> None:
        if self.arena.fragmentation > self.compact_trigger:
            self.compact()

    # -- telemetry ------------------------------------------------------------

    def telemetry(self) -> TierTelemetry:
        arena = self.arena
        logical = PAGE_BYTES * len(self.records)
        physical = arena.used_bytes
        ratio = logical / physical if physical else 1.0
        effective_capacity = logical + arena.free_bytes * ratio
        return TierTelemetry(
            logical_bytes=logical,
            physical_bytes=physical,
            compression_ratio=ratio,
            expansion_factor=effective_capacity / arena.capacity,
            fragmentation=arena.fragmentation,
            live_pages=len(self.records),
        )

    # -- diagnostics ------------------------------------------------------------

    def audit(self) -> None:
        """Verify counters against a full recount and check extent disjointness."""
        arena = self.arena
        live_line = live_block = metadata = 0
        extents: list[tuple[int, int]] = []
        for rec in self.records.values():
            if rec.mode is StoreMode.CACHELINE:
                metadata += LINES_PER_PAGE * METADATA_OVERHEAD_BYTES
                for slot in rec.lines:
                    live_line += slot.size_class
                    if slot.size_class:
                        extents.append((slot.offset, slot.size_class))
            else:
                metadata += BLOCK_META_BYTES
                live_block += rec.block.compressed_len
                extents.append((rec.block.offset, rec.block.compressed_len))

        if live_line != arena.live_line_bytes or live_block != arena.live_block_bytes:
            raise AssertionError("live byte counters diverge from records")
        if metadata != arena.metadata_bytes:
            raise AssertionError("metadata byte counter diverges from records")
        if arena.free_bytes < 0:
            raise AssertionError("negative free bytes")
        total = arena.free_bytes + arena.live_bytes + arena.dead_bytes + arena.metadata_bytes
        if total != arena.capacity:
            raise AssertionError("conservation violated: free+live+dead+metadata != capacity")
        if arena.used_bytes != arena.live_bytes + arena.metadata_bytes:
            raise AssertionError("used_bytes identity violated")

        extents.sort()
        prev_end = 0
        for off, size in extents:
            if off < 0 or off + size > arena.capacity:
                raise AssertionError(f"extent ({off}, {size}) outside capacity")
            if off < prev_end:
                raise AssertionError(f"extent overlap at offset {off}")
            prev_end = off + size

    def debug_dump(self) -> str:
        arena = self.arena
        lines = [
            f"capacity_bytes {arena.capacity}",
            f"live_bytes {arena.live_bytes}",
            f"dead_bytes {arena.dead_bytes}",
            f"metadata_bytes {arena.metadata_bytes}",
            f"free_bytes {arena.free_bytes}",
            f"page_record_bytes {PAGE_RECORD_BYTES * len(self.records)}",
            f"live_pages {len(self.records)}",
        ]
        for page_id in sorted(self.records):
            rec = self.records[page_id]
            if rec.mode is StoreMode.CACHELINE:
                descs = " ".join(
                    f"{slot.scheme.name}:{slot.size_class}@{slot.offset}" for slot in rec.lines
                )
                lines.append(f"page {page_id} cacheline {descs}")
            else:
                ext = rec.block
                lines.append(f"page {page_id} block len={ext.compressed_len}@{ext.offset}")
        return "\n".join(lines) + "\n"

    # -- helpers ------------------------------------------------------------

    def _record(self, page_id: int) -> PageRecord:
        rec = self.records.get(page_id)
        if rec is None:
            raise PageNotFoundError(f"page {page_id} is not live in the compressed tier")
        return rec

    def _line_of(self, slot: LineSlot) -> CompressedLine:
        if slot.size_class:
            payload = bytes(self.arena.storage[slot.offset:slot.offset + slot.size_class])
        else:
            payload = b""
        return CompressedLine(slot.scheme, slot.size_class, payload)
