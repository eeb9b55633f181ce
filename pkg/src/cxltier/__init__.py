"""Deterministic simulator and codec library for a lossless compressed CXL memory tier.

Subsystems:
  linecodec   64-byte cache-line codec (zero/repeat/base-delta schemes)
  lz4block    LZ4 block-format codec for 1 KiB / 4 KiB pages
  tier        compressed-tier store: slab allocation, translation, compaction
  device      controller model with additive nanosecond latency stages
  host        host emulator: LRU cold-page demotion and promotion
  workload    synthetic content profiles, zipf op streams, trace files
  tco         capital cost per effective gigabyte
  cli         bench-compress / simulate / tco / validate-budgets
"""

from .linecodec import CompressedLine, Scheme, compress_line, decompress_line, line_ratio
from .lz4block import CompressedBlock, compress_block, decompress_block
from .tier import StoreMode, TierStore, TierTelemetry
from .device import (
    BudgetReport,
    CxlOp,
    CxlRequest,
    CxlResponse,
    Device,
    DeviceConfig,
    LatencyModel,
    modeled_decompress_bandwidth,
    validate_budgets,
)
from .host import HostEmulator, HostMemory, RunReport, detect_cold_pages, run_workload
from .workload import ContentProfile, WorkloadKind, WorkloadSpec, load_trace
from .tco import TcoParams, TcoReport, compute_tco, sweep

__version__ = "0.1.0"

__all__ = [
    "BudgetReport",
    "CompressedBlock",
    "CompressedLine",
    "ContentProfile",
    "CxlOp",
    "CxlRequest",
    "CxlResponse",
    "Device",
    "DeviceConfig",
    "HostEmulator",
    "HostMemory",
    "LatencyModel",
    "RunReport",
    "Scheme",
    "StoreMode",
    "TcoParams",
    "TcoReport",
    "TierStore",
    "TierTelemetry",
    "WorkloadKind",
    "WorkloadSpec",
    "compress_block",
    "compress_line",
    "compute_tco",
    "decompress_block",
    "decompress_line",
    "detect_cold_pages",
    "line_ratio",
    "load_trace",
    "modeled_decompress_bandwidth",
    "run_workload",
    "sweep",
    "validate_budgets",
]
