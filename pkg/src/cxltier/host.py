"""Emulated host: direct tier plus compressed CXL tier, with cold-page demotion.

The host keeps pages resident in a direct tier of fixed capacity and demotes
the least-recently-used pages to the device when occupancy crosses a high
watermark (demote the coldest 10% of capacity once occupancy exceeds 90%).
Demoted pages are reached two ways, mirroring the two access paths a real
deployment has:

  * page-granular touches (trace ops R/W) promote the page back immediately;
  * line-granular touches (synthetic workloads and trace ops RL/WL) go over
    the CXL data path as READ_LINE / WRITE_LINE, and a demoted page is
    promoted once it has absorbed ``promote_after`` line touches.

Every run keeps a shadow copy of all page contents, built purely from the
generators and the write stream, and verifies the tiered system against it
at the end of the run.  Reports are a pure function of (spec, config, host
parameters).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .device import (
    CxlOp,
    CxlRequest,
    CxlStatus,
    Device,
    DeviceConfig,
    nearest_rank_percentile,
)
from .errors import CapacityExhaustedError, StateError
from .rng import Xoshiro256StarStar, derive_seed
from .workload import (
    LINE_BYTES,
    LINES_PER_PAGE,
    PAGE_BYTES,
    ContentProfile,
    WorkloadKind,
    WorkloadSpec,
    ZipfSampler,
    generate_line,
    generate_page,
    page_content_rng,
)

DEMOTE_HIGH_WATERMARK = 0.9
DEMOTE_BATCH_FRACTION = 0.1
DEFAULT_PROMOTE_AFTER = 2


@dataclass(slots=True)
class ResidentPage:
    content: bytearray
    last_access: int


class HostMemory:
    """Direct-tier occupancy state: resident pages and the demoted set."""

    def __init__(self, direct_capacity_pages: int):
        if direct_capacity_pages < 1:
            raise ValueError("direct_capacity_pages must be >= 1")
        self.direct_capacity_pages = direct_capacity_pages
        self.resident: dict[int, ResidentPage] = {}
        self.demoted: set[int] = set()


def detect_cold_pages(state: HostMemory, k: int) -> list[int]:
    """The k resident pages with the oldest access ordinals (ties: lower id)."""
    if k > len(state.resident):
        raise ValueError(
            f"requested {k} cold pages but only {len(state.resident)} are resident"
        )
    items = ((page.last_access, pid) for pid, page in state.resident.items())
    return [pid for _, pid in heapq.nsmallest(k, items)]


@dataclass(frozen=True)
class TelemetrySample:
    ordinal: int
    logical_bytes: int
    physical_bytes: int
    compression_ratio: float


@dataclass(frozen=True)
class LatencyPercentiles:
    p50_ns: float
    p99_ns: float
    p9999_ns: float


@dataclass(frozen=True)
class RunReport:
    ops_executed: int
    demotions: int
    promotions: int
    demotion_rejections: int
    telemetry_series: list[TelemetrySample]
    latency_percentiles: LatencyPercentiles | None
    geomean_demoted_ratio: float | None
    shadow_verified: bool


class HostEmulator:
    def __init__(self, device: Device, direct_capacity_pages: int, *,
                 promote_after: int = DEFAULT_PROMOTE_AFTER,
                 high_watermark: float = DEMOTE_HIGH_WATERMARK,
                 batch_fraction: float = DEMOTE_BATCH_FRACTION):
        self.device = device
        self.mem = HostMemory(direct_capacity_pages)
        self.promote_after = promote_after
        self.high_watermark = high_watermark
        self.batch_fraction = batch_fraction
        self.shadow: dict[int, bytearray] = {}
        self.demoted_touches: dict[int, int] = {}
        self.demoted_physical: dict[int, int] = {}
        self.ordinal = 0
        self.demotions = 0
        self.promotions = 0
        self.demotion_rejections = 0

    # -- migration primitives --------------------------------------------------

    def demote(self, page_id: int) -> float:
        """Push one resident page to the device; on rejection it stays resident."""
        page = self.mem.resident.get(page_id)
        if page is None:
            raise StateError(f"page {page_id} is not resident, cannot demote")
        resp = self.device.handle_request(
            CxlRequest(CxlOp.MIGRATE_PAGE_IN, page_id=page_id, payload=bytes(page.content))
        )
        if resp.status is CxlStatus.CAPACITY_EXHAUSTED:
            self.demotion_rejections += 1
            return resp.latency_ns
        if resp.status is not CxlStatus.OK:
            raise StateError(f"demotion of page {page_id} failed: {resp.status.name}")
        del self.mem.resident[page_id]
        self.mem.demoted.add(page_id)
        self.demoted_touches[page_id] = 0
        self.demoted_physical[page_id] = resp.detail.physical_bytes_used
        self.demotions += 1
        return resp.latency_ns

    def promote(self, page_id: int) -> float:
        """Fetch one demoted page back into the direct tier, evicting if full."""
        if page_id not in self.mem.demoted:
            raise StateError(f"page {page_id} is not demoted, cannot promote")
        if len(self.mem.resident) >= self.mem.direct_capacity_pages:
            coldest = detect_cold_pages(self.mem, 1)[0]
            self.demote(coldest)
            if len(self.mem.resident) >= self.mem.direct_capacity_pages:
                raise CapacityExhaustedError(
                    "direct tier full and the device rejected the eviction"
                )
        resp = self.device.handle_request(
            CxlRequest(CxlOp.MIGRATE_PAGE_OUT, page_id=page_id)
        )
        if resp.status is not CxlStatus.OK:
            raise StateError(f"promotion of page {page_id} failed: {resp.status.name}")
        self.mem.demoted.discard(page_id)
        self.demoted_touches.pop(page_id, None)
        self.demoted_physical.pop(page_id, None)
        self.ordinal += 1
        self.mem.resident[page_id] = ResidentPage(bytearray(resp.payload), self.ordinal)
        self.promotions += 1
        self._pressure_check()
        return resp.latency_ns

    # -- access paths -----------------------------------------------------------

    def _materialize(self, page_id: int, profile: ContentProfile, seed: int) -> ResidentPage:
        content = generate_page(profile, page_content_rng(seed, page_id))
        self.shadow[page_id] = bytearray(content)
        self.ordinal += 1
        page = ResidentPage(bytearray(content), self.ordinal)
        self.mem.resident[page_id] = page
        self._pressure_check()
        return page

    def _pressure_check(self) -> None:
        capacity = self.mem.direct_capacity_pages
        if len(self.mem.resident) <= self.high_watermark * capacity:
            return
        batch = max(1, int(capacity * self.batch_fraction))
        batch = min(batch, len(self.mem.resident))
        for pid in detect_cold_pages(self.mem, batch):
            before = self.demotion_rejections
            self.demote(pid)
            if self.demotion_rejections > before:
                break  # device is full; retrying the rest of the batch is futile

    def _touch_resident(self, page_id: int) -> ResidentPage:
        page = self.mem.resident[page_id]
        self.ordinal += 1
        page.last_access = self.ordinal
        return page

    def line_access(self, page_id: int, line_index: int, write_payload: bytes | None,
                    profile: ContentProfile, seed: int) -> None:
        """Serve one line-granular touch, wherever the page lives."""
        if write_payload is not None:
            shadow = self.shadow.get(page_id)
            if shadow is None:
                self._materialize(page_id, profile, seed)
                shadow = self.shadow[page_id]
            shadow[line_index * LINE_BYTES:(line_index + 1) * LINE_BYTES] = write_payload
        elif page_id not in self.shadow:
            self._materialize(page_id, profile, seed)

        if page_id in self.mem.resident:
            page = self._touch_resident(page_id)
            if write_payload is not None:
                page.content[line_index * LINE_BYTES:(line_index + 1) * LINE_BYTES] = write_payload
            return

        # Demoted: go over the CXL data path.
        touches = self.demoted_touches.get(page_id, 0) + 1
        self.demoted_touches[page_id] = touches
        if touches >= self.promote_after:
            try:
                self.promote(page_id)
            except CapacityExhaustedError:
                pass  # both tiers full: keep serving at line granularity
            else:
                page = self.mem.resident[page_id]
                if write_payload is not None:
                    page.content[line_index * LINE_BYTES:(line_index + 1) * LINE_BYTES] = write_payload
                return
        if write_payload is not None:
            resp = self.device.handle_request(
                CxlRequest(CxlOp.WRITE_LINE, page_id=page_id, line_index=line_index,
                           payload=write_payload)
            )
        else:
            resp = self.device.handle_request(
                CxlRequest(CxlOp.READ_LINE, page_id=page_id, line_index=line_index)
            )
        if resp.status is not CxlStatus.OK:
            raise StateError(
                f"line access to demoted page {page_id} failed: {resp.status.name}"
            )

    def page_access(self, page_id: int, line_index: int, write_payload: bytes | None,
                    profile: ContentProfile, seed: int) -> None:
        """Page-granular touch: demoted pages are promoted before access."""
        if page_id not in self.shadow:
            self._materialize(page_id, profile, seed)
        elif page_id in self.mem.demoted:
            self.promote(page_id)
        if page_id not in self.mem.resident:
            # Promotion can fail only when both tiers are saturated.
            raise CapacityExhaustedError(f"cannot make page {page_id} resident")
        page = self._touch_resident(page_id)
        if write_payload is not None:
            start = line_index * LINE_BYTES
            page.content[start:start + LINE_BYTES] = write_payload
            self.shadow[page_id][start:start + LINE_BYTES] = write_payload

    # -- verification -------------------------------------------------------------

    def verify_shadow(self) -> bool:
        """Compare every materialized page against the shadow copy."""
        for page_id, expected in self.shadow.items():
            if page_id in self.mem.resident:
                actual = bytes(self.mem.resident[page_id].content)
            elif page_id in self.mem.demoted:
                actual = self.device.tier.load_page(page_id)
            else:
                return False
            if actual != bytes(expected):
                return False
        return True

    def geomean_demoted_ratio(self) -> float | None:
        if not self.mem.demoted:
            return None
        logs = [
            math.log(PAGE_BYTES / self.demoted_physical[pid])
            for pid in sorted(self.mem.demoted)
        ]
        return math.exp(sum(logs) / len(logs))


def run_workload(spec: WorkloadSpec, device: DeviceConfig, *,
                 direct_capacity_pages: int | None = None,
                 promote_after: int = DEFAULT_PROMOTE_AFTER,
                 sample_interval: int | None = None) -> RunReport:
    """Execute a workload against a fresh device; deterministic given seed."""
    spec.validate()
    device.validate()
    dev = Device(device)
    capacity = direct_capacity_pages or max(1, spec.page_count // 4)
    host = HostEmulator(dev, capacity, promote_after=promote_after)
    return drive(host, spec, sample_interval)


def drive(host: HostEmulator, spec: WorkloadSpec, sample_interval: int | None = None) -> RunReport:
    interval = sample_interval or max(1, spec.op_count // 50)
    op_rng = Xoshiro256StarStar(derive_seed(spec.seed, 0x6F707374))
    sampler = (
        ZipfSampler(spec.page_count, spec.zipf_s)
        if spec.kind is WorkloadKind.ZIPFIAN
        else None
    )
    series: list[TelemetrySample] = []

    def sample_telemetry(ordinal: int) -> None:
        resp = host.device.handle_request(CxlRequest(CxlOp.TELEMETRY))
        tel = resp.detail
        series.append(
            TelemetrySample(ordinal, tel.logical_bytes, tel.physical_bytes,
                            tel.compression_ratio)
        )

    sample_telemetry(0)
    executed = 0
    for i in range(spec.op_count):
        if spec.kind is WorkloadKind.TRACE:
            top = spec.trace_ops[i]
            is_write = top.op in ("W", "WL")
            payload = (
                generate_line(spec.content_profile, op_rng) if is_write else None
            )
            if top.op in ("R", "W"):
                host.page_access(top.page_id, top.line_index, payload,
                                 spec.content_profile, spec.seed)
            else:
                host.line_access(top.page_id, top.line_index, payload,
                                 spec.content_profile, spec.seed)
        else:
            if spec.kind is WorkloadKind.UNIFORM:
                page_id = op_rng.below(spec.page_count)
            elif spec.kind is WorkloadKind.SEQUENTIAL:
                page_id = i % spec.page_count
            else:
                page_id = sampler.sample(op_rng)
            line_index = op_rng.below(LINES_PER_PAGE)
            is_write = op_rng.float01() < spec.write_fraction
            payload = generate_line(spec.content_profile, op_rng) if is_write else None
            host.line_access(page_id, line_index, payload, spec.content_profile, spec.seed)
        executed += 1
        if executed % interval == 0:
            sample_telemetry(executed)

    if not series or series[-1].ordinal != executed:
        sample_telemetry(executed)

    reads = host.device.stats.line_read_latencies()
    percentiles = None
    if reads:
        percentiles = LatencyPercentiles(
            p50_ns=nearest_rank_percentile(reads, 50.0),
            p99_ns=nearest_rank_percentile(reads, 99.0),
            p9999_ns=nearest_rank_percentile(reads, 99.99),
        )

    return RunReport(
        ops_executed=executed,
        demotions=host.demotions,
        promotions=host.promotions,
        demotion_rejections=host.demotion_rejections,
        telemetry_series=series,
        latency_percentiles=percentiles,
        geomean_demoted_ratio=host.geomean_demoted_ratio(),
        shadow_verified=host.verify_shadow(),
    )
