"""CXL Type 3 expander controller model with an additive nanosecond latency model.

The device wraps a TierStore and serves an abstract six-op command set.
Latency is modeled, never measured: each response carries a stage breakdown
whose sum is the request latency, and every listed stage is one the request
actually traversed.  The model is additive with no queuing.

Translation lookups behave warm-on-first-access: installing a page
(MIGRATE_PAGE_IN) pays the miss cost without warming the access-path cache,
so the first line access of a demoted page misses and later ones hit.

Compaction interference is modeled incrementally: a compaction of N bytes
leaves ceil(N / 4096) stall increments behind; the triggering request and
each subsequent data-path request absorb one increment (one relocation unit
of 4 KiB at compaction_stall_ns_per_kb) until the debt drains.  Control-path
requests (CONFIG, TELEMETRY) bypass the data path and never stall.

Budget checks follow the hyperscale tiered-memory-expander envelope:
compressed-line reads within 250 ns at the median and under 1 us at the
99.99th percentile, with modeled decompression bandwidth of at least 46 GB/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    CapacityExhaustedError,
    ConfigError,
    PageNotFoundError,
    StateError,
    UnsupportedGranularityError,
)
from .tier import (
    LINES_PER_PAGE,
    PAGE_BYTES,
    StoreMode,
    TierStore,
    TierTelemetry,
)

# Budget envelope constants (ns, ns, GB/s).
OCP_ACCESS_P50_NS = 250.0
OCP_TAIL_P9999_NS = 1000.0
OCP_DECOMPRESS_GBPS = 46.0

_COMPACTION_INCREMENT_BYTES = 4096


@dataclass(frozen=True)
class LatencyModel:
    """Per-stage nanosecond costs; request latency is the sum of traversed stages."""

    link_ns: float = 25.0  # each direction
    translation_hit_ns: float = 40.0
    translation_miss_ns: float = 120.0
    dram_access_ns: float = 60.0
    decompress_per_line_ns: float = 8.0
    compress_per_line_ns: float = 10.0
    relocation_stall_ns: float = 150.0
    compaction_stall_ns_per_kb: float = 50.0

    def validate(self) -> None:
        for name, value in self.__dict__.items():
            if value < 0:
                raise ConfigError(f"latency stage {name} must be >= 0, got {value}")

    def compaction_increment_ns(self) -> float:
        """Stall paid per request colliding with one 4 KiB relocation unit."""
        return self.compaction_stall_ns_per_kb * (_COMPACTION_INCREMENT_BYTES / 1024)


@dataclass(frozen=True)
class DeviceConfig:
    mode: StoreMode = StoreMode.CACHELINE
    capacity_bytes: int = 64 * 1024 * 1024
    channels: int = 4
    transfer_rate_mtps: int = 1867
    decompress_engines: int = 1
    engine_bytes_per_cycle: int = 64
    clock_ghz: float = 1.2
    latency: LatencyModel = field(default_factory=LatencyModel)

    def validate(self) -> None:
        if self.channels < 1:
            raise ConfigError(f"channels must be >= 1, got {self.channels}")
        if self.decompress_engines < 1:
            raise ConfigError(f"decompress_engines must be >= 1, got {self.decompress_engines}")
        if self.engine_bytes_per_cycle < 1:
            raise ConfigError(
                f"engine_bytes_per_cycle must be >= 1, got {self.engine_bytes_per_cycle}"
            )
        if self.transfer_rate_mtps <= 0:
            raise ConfigError(f"transfer_rate_mtps must be > 0, got {self.transfer_rate_mtps}")
        if self.clock_ghz <= 0:
            raise ConfigError(f"clock_ghz must be > 0, got {self.clock_ghz}")
        if self.capacity_bytes < 2 * PAGE_BYTES:
            raise ConfigError(f"capacity_bytes too small: {self.capacity_bytes}")
        self.latency.validate()


def modeled_decompress_bandwidth(cfg: DeviceConfig) -> float:
    """Decompression throughput in GB/s; computed, never stored."""
    return cfg.decompress_engines * cfg.engine_bytes_per_cycle * cfg.clock_ghz


class CxlOp(Enum):
    READ_LINE = "READ_LINE"
    WRITE_LINE = "WRITE_LINE"
    MIGRATE_PAGE_IN = "MIGRATE_PAGE_IN"
    MIGRATE_PAGE_OUT = "MIGRATE_PAGE_OUT"
    CONFIG = "CONFIG"
    TELEMETRY = "TELEMETRY"


_CONTROL_OPS = (CxlOp.CONFIG, CxlOp.TELEMETRY)


class CxlStatus(Enum):
    OK = "OK"
    NOT_FOUND = "NOT_FOUND"
    STATE_ERROR = "STATE_ERROR"
    CAPACITY_EXHAUSTED = "CAPACITY_EXHAUSTED"
    BAD_REQUEST = "BAD_REQUEST"


@dataclass(frozen=True)
class CxlRequest:
    op: CxlOp
    page_id: int | None = None
    line_index: int | None = None
    payload: bytes | None = None
    config: DeviceConfig | None = None


@dataclass(frozen=True)
class CxlResponse:
    status: CxlStatus
    payload: bytes | None
    latency_ns: float
    stage_breakdown: tuple[tuple[str, float], ...]
    detail: object | None = None


class RequestStats:
    """Per-op latency samples collected from completed requests."""

    def __init__(self):
        self.samples: dict[CxlOp, list[float]] = {op: [] for op in CxlOp}

    def record(self, op: CxlOp, latency_ns: float) -> None:
        self.samples[op].append(latency_ns)

    @property
    def total_requests(self) -> int:
        return sum(len(v) for v in self.samples.values())

    def line_read_latencies(self) -> list[float]:
        return self.samples[CxlOp.READ_LINE]


@dataclass(frozen=True)
class BudgetReport:
    p50_ns: float
    p99_ns: float
    p9999_ns: float
    bandwidth_ok: bool
    access_ok: bool
    tail_ok: bool


def nearest_rank_percentile(values: list[float], pct: float) -> float:
    """Nearest-rank percentile over a non-empty sample list."""
    if not values:
        raise ValueError("percentile of empty sample set")
    ordered = sorted(values)
    rank = max(1, -(-len(ordered) * pct // 100))  # ceil without float error
    return ordered[int(rank) - 1]


def validate_budgets(cfg: DeviceConfig, scenario_stats: RequestStats) -> BudgetReport:
    """Check percentile and bandwidth budgets over compressed-line reads."""
    if scenario_stats.total_requests == 0:
        raise ValueError("scenario stats contain no completed requests")
    reads = scenario_stats.line_read_latencies()
    if not reads:
        raise ValueError("scenario stats contain no compressed-line reads")
    p50 = nearest_rank_percentile(reads, 50.0)
    p99 = nearest_rank_percentile(reads, 99.0)
    p9999 = nearest_rank_percentile(reads, 99.99)
    return BudgetReport(
        p50_ns=p50,
        p99_ns=p99,
        p9999_ns=p9999,
        bandwidth_ok=modeled_decompress_bandwidth(cfg) >= OCP_DECOMPRESS_GBPS,
        access_ok=p50 <= OCP_ACCESS_P50_NS,
        tail_ok=p9999 <= OCP_TAIL_P9999_NS,
    )


class Device:
    """Controller front-end: dispatches requests to the tier and prices them."""

    def __init__(self, config: DeviceConfig | None = None):
        cfg = config or DeviceConfig()
        cfg.validate()
        self.config = cfg
        self.tier = TierStore(
            cfg.capacity_bytes,
            compaction_ns_per_kb=cfg.latency.compaction_stall_ns_per_kb,
        )
        self.stats = RequestStats()
        self._warm_pages: set[int] = set()
        self._pending_stall_increments = 0
        self._inflight = False

    # -- public convenience wrappers -----------------------------------------

    def configure(self, cfg: DeviceConfig) -> DeviceConfig:
        """Swap device parameters; returns the previous config."""
        if self._inflight:
            raise StateError("CONFIG rejected: a mutating request is in flight")
        return self._apply_config(cfg)

    def _apply_config(self, cfg: DeviceConfig) -> DeviceConfig:
        cfg.validate()
        previous = self.config
        if cfg.capacity_bytes != previous.capacity_bytes:
            if self.tier.records:
                raise ValueError("cannot resize a device holding live pages")
            self.tier = TierStore(
                cfg.capacity_bytes,
                compaction_ns_per_kb=cfg.latency.compaction_stall_ns_per_kb,
            )
        else:
            self.tier.compaction_ns_per_kb = cfg.latency.compaction_stall_ns_per_kb
        self.config = cfg
        return previous

    def telemetry(self) -> TierTelemetry:
        return self.tier.telemetry()

    # -- request handling -----------------------------------------------------

    def handle_request(self, req: CxlRequest) -> CxlResponse:
        if self._inflight:
            raise StateError("device is single-stream: request already in flight")
        self._inflight = True
        try:
            response = self._dispatch(req)
        finally:
            self._inflight = False
        self.stats.record(req.op, response.latency_ns)
        return response

    def _dispatch(self, req: CxlRequest) -> CxlResponse:
        lat = self.config.latency
        stages: list[tuple[str, float]] = [("link_req", lat.link_ns)]
        status = CxlStatus.OK
        payload: bytes | None = None
        detail: object | None = None
        compactions_before = self.tier.compaction_count
        stall_ns = 0.0
        if req.op not in _CONTROL_OPS and self._pending_stall_increments > 0:
            self._pending_stall_increments -= 1
            stall_ns += lat.compaction_increment_ns()

        try:
            if req.op is CxlOp.READ_LINE:
                self._check_line_index(req.line_index)
                rec = self._lookup(stages, req.page_id, warm=True)
                stages.append(("dram_access", lat.dram_access_ns))
                if rec.mode is StoreMode.BLOCK:
                    # Legacy path: a line access to a block page fetches and
                    # decodes the whole block.
                    page = self.tier.load_page(req.page_id)
                    payload = page[req.line_index * 64:(req.line_index + 1) * 64]
                    units = LINES_PER_PAGE
                else:
                    payload = self.tier.read_line(req.page_id, req.line_index)
                    units = 1
                stages.append(("decompress", units * lat.decompress_per_line_ns))

            elif req.op is CxlOp.WRITE_LINE:
                self._check_line_index(req.line_index)
                self._check_payload(req.payload)
                rec = self._lookup(stages, req.page_id, warm=True)
                if rec.mode is StoreMode.BLOCK:
                    original = self.tier.load_page(req.page_id)
                    page = bytearray(original)
                    page[req.line_index * 64:(req.line_index + 1) * 64] = req.payload
                    stages.append(("decompress", LINES_PER_PAGE * lat.decompress_per_line_ns))
                    stages.append(("compress", LINES_PER_PAGE * lat.compress_per_line_ns))
                    stages.append(("dram_access", lat.dram_access_ns))
                    self.tier.free_page(req.page_id)
                    try:
                        self.tier.store_page(req.page_id, bytes(page), StoreMode.BLOCK)
                    except CapacityExhaustedError:
                        # The patched block compressed worse and no longer
                        # fits; the original always fits back into the space
                        # its free just released.
                        self.tier.store_page(req.page_id, original, StoreMode.BLOCK)
                        raise
                else:
                    stages.append(("compress", lat.compress_per_line_ns))
                    stages.append(("dram_access", lat.dram_access_ns))
                    outcome = self.tier.write_line(req.page_id, req.line_index, req.payload)
                    detail = outcome
                    if outcome.relocated:
                        stages.append(("relocation_stall", lat.relocation_stall_ns))

            elif req.op is CxlOp.MIGRATE_PAGE_IN:
                if req.payload is None or len(req.payload) != PAGE_BYTES:
                    raise ValueError("MIGRATE_PAGE_IN requires a 4096-byte payload")
                # Translation install always walks the table: miss cost.
                stages.append(("translation_miss", lat.translation_miss_ns))
                if req.page_id in self.tier.records:
                    raise StateError(f"page {req.page_id} already live on device")
                stages.append(("compress", LINES_PER_PAGE * lat.compress_per_line_ns))
                stages.append(("dram_access", lat.dram_access_ns))
                detail = self.tier.store_page(req.page_id, req.payload, self.config.mode)
                self._warm_pages.discard(req.page_id)

            elif req.op is CxlOp.MIGRATE_PAGE_OUT:
                self._lookup(stages, req.page_id, warm=False)
                stages.append(("dram_access", lat.dram_access_ns))
                payload = self.tier.load_page(req.page_id)
                stages.append(("decompress", LINES_PER_PAGE * lat.decompress_per_line_ns))
                self.tier.free_page(req.page_id)
                self._warm_pages.discard(req.page_id)

            elif req.op is CxlOp.TELEMETRY:
                stages.append(("translation_hit", lat.translation_hit_ns))
                detail = self.tier.telemetry()

            elif req.op is CxlOp.CONFIG:
                if req.config is None:
                    raise ValueError("CONFIG request carries no config")
                detail = self._apply_config(req.config)

            else:  # pragma: no cover - enum is closed
                raise ValueError(f"unknown op {req.op!r}")

        except PageNotFoundError:
            status = CxlStatus.NOT_FOUND
        except CapacityExhaustedError:
            status = CxlStatus.CAPACITY_EXHAUSTED
        except UnsupportedGranularityError:
            status = CxlStatus.BAD_REQUEST
        except StateError:
            status = CxlStatus.STATE_ERROR
        except (ValueError, ConfigError):
            status = CxlStatus.BAD_REQUEST

        # A compaction triggered inside this request leaves stall debt; this
        # request absorbs the first increment and later data-path requests
        # drain the rest.
        if self.tier.compaction_count > compactions_before:
            bytes_moved = self.tier.last_compaction_bytes_moved
            if bytes_moved:
                increments = -(-bytes_moved // _COMPACTION_INCREMENT_BYTES)
                self._pending_stall_increments += increments - 1
                stall_ns += lat.compaction_increment_ns()

        if stall_ns:
            stages.append(("compaction_stall", stall_ns))
        stages.append(("link_rsp", lat.link_ns))
        latency = sum(ns for _, ns in stages)
        return CxlResponse(
            status=status,
            payload=payload,
            latency_ns=latency,
            stage_breakdown=tuple(stages),
            detail=detail,
        )

    # -- helpers ---------------------------------------------------------------

    def _lookup(self, stages: list, page_id: int | None, warm: bool):
        hit = page_id in self._warm_pages
        lat = self.config.latency
        stages.append(
            ("translation_hit", lat.translation_hit_ns)
            if hit
            else ("translation_miss", lat.translation_miss_ns)
        )
        rec = self.tier.records.get(page_id)
        if rec is None:
            raise PageNotFoundError(f"page {page_id} is not live on the device")
        if warm and not hit:
            self._warm_pages.add(page_id)
        return rec

    @staticmethod
    def _check_line_index(line_index: int | None) -> None:
        if line_index is None or not 0 <= line_index < LINES_PER_PAGE:
            raise ValueError(f"line index must be 0..{LINES_PER_PAGE - 1}, got {line_index}")

    @staticmethod
    def _check_payload(payload: bytes | None) -> None:
        if payload is None or len(payload) != 64:
            raise ValueError("line payload must be exactly 64 bytes")
