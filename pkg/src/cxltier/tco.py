"""Capital-cost model: $/effective-GB with and without the compressed tier.

Both scenarios buy the same hardware (platform, direct DRAM, CXL DRAM and
device); compression changes only how many effective gigabytes that spend
provides.  Savings therefore depend on the direct:CXL capacity split and the
compression ratio alone:

    baseline $/GB   = total_cost / (direct_gb + cxl_gb)
    compressed $/GB = total_cost / (direct_gb + ratio * cxl_gb)
    savings         = 1 - compressed / baseline

All arithmetic runs over exact rationals; a ratio of 1.0 yields exactly zero
savings.  The shipped default parameter file uses a CXL:direct split of 0.4
(256 GB CXL against 640 GB direct), which places the savings at a 2.0x ratio
at 2/9 = 22.2%.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class TcoParams:
    direct_dram_gb: float
    cxl_dram_gb: float
    dram_cost_per_gb: float
    cxl_device_cost: float
    platform_base_cost: float
    compression_ratio: float

    def validate(self) -> None:
        if self.direct_dram_gb <= 0 or self.cxl_dram_gb <= 0:
            raise ValueError("capacities must be > 0")
        for name in ("dram_cost_per_gb", "cxl_device_cost", "platform_base_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.compression_ratio < 1:
            raise ValueError(
                f"compression_ratio must be >= 1, got {self.compression_ratio}"
            )


@dataclass(frozen=True)
class TcoReport:
    baseline_cost_per_gb: float
    compressed_cost_per_gb: float
    savings_fraction: float
    effective_capacity_gb: float


def compute_tco(p: TcoParams) -> TcoReport:
    p.validate()
    direct = Fraction(p.direct_dram_gb)
    cxl = Fraction(p.cxl_dram_gb)
    ratio = Fraction(p.compression_ratio)
    total_cost = (
        Fraction(p.platform_base_cost)
        + (direct + cxl) * Fraction(p.dram_cost_per_gb)
        + Fraction(p.cxl_device_cost)
    )
    raw_capacity = direct + cxl
    effective_capacity = direct + ratio * cxl
    baseline = total_cost / raw_capacity
    compressed = total_cost / effective_capacity
    savings = 1 - compressed / baseline if baseline else Fraction(0)
    return TcoReport(
        baseline_cost_per_gb=float(baseline),
        compressed_cost_per_gb=float(compressed),
        savings_fraction=float(savings),
        effective_capacity_gb=float(effective_capacity),
    )


def sweep(p: TcoParams, ratios: list[float]) -> list[TcoReport]:
    """compute_tco at each ratio, in input order."""
    reports = []
    for ratio in ratios:
        params = TcoParams(
            direct_dram_gb=p.direct_dram_gb,
            cxl_dram_gb=p.cxl_dram_gb,
            dram_cost_per_gb=p.dram_cost_per_gb,
            cxl_device_cost=p.cxl_device_cost,
            platform_base_cost=p.platform_base_cost,
            compression_ratio=ratio,
        )
        reports.append(compute_tco(params))
    return reports


# Calibrated so a 2.0x compression ratio lands inside the 20-25% savings band.
DEFAULT_PARAMS = TcoParams(
    direct_dram_gb=640.0,
    cxl_dram_gb=256.0,
    dram_cost_per_gb=2.5,
    cxl_device_cost=400.0,
    platform_base_cost=8000.0,
    compression_ratio=2.0,
)
