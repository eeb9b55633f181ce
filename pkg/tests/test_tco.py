"""TCO model: identity, calibrated band, monotonicity, scale invariance."""

import random

import pytest

from cxltier.tco import DEFAULT_PARAMS, TcoParams, compute_tco, sweep


def _params(**overrides) -> TcoParams:
    base = dict(
        direct_dram_gb=640.0,
        cxl_dram_gb=256.0,
        dram_cost_per_gb=2.5,
        cxl_device_cost=400.0,
        platform_base_cost=8000.0,
        compression_ratio=2.0,
    )
    base.update(overrides)
    return TcoParams(**base)


def test_ratio_one_gives_exactly_zero_savings():
    report = compute_tco(_params(compression_ratio=1.0))
    assert report.savings_fraction == 0.0
    assert report.baseline_cost_per_gb == report.compressed_cost_per_gb


def test_default_parameters_land_in_band_at_2x():
    report = compute_tco(DEFAULT_PARAMS)
    assert 0.20 <= report.savings_fraction <= 0.25
    assert report.effective_capacity_gb == pytest.approx(640.0 + 2.0 * 256.0)


def test_savings_depend_only_on_split_and_ratio():
    a = compute_tco(_params())
    b = compute_tco(_params(platform_base_cost=99999.0, cxl_device_cost=1.0))
    assert a.savings_fraction == pytest.approx(b.savings_fraction)
    assert a.baseline_cost_per_gb != b.baseline_cost_per_gb


def test_large_ratio_limit_bounded_by_one():
    # savings = 1 - (direct+cxl)/(direct + ratio*cxl): increasing in ratio,
    # approaching (but never reaching) 1.
    prev = -1.0
    for ratio in (1.0, 2.0, 4.0, 16.0, 256.0, 65536.0):
        s = compute_tco(_params(compression_ratio=ratio)).savings_fraction
        assert prev <= s < 1.0
        prev = s
    assert prev > 0.999


def test_monotone_in_ratio_and_device_cost_random_draws():
    rnd = random.Random(99)
    for _ in range(10_000):
        direct = rnd.uniform(1, 2048)
        cxl = rnd.uniform(1, 2048)
        dram = rnd.uniform(0, 10)
        device = rnd.uniform(0, 5000)
        platform = rnd.uniform(0, 50000)
        r1 = rnd.uniform(1, 8)
        r2 = r1 + rnd.uniform(0, 8)
        s1 = compute_tco(TcoParams(direct, cxl, dram, device, platform, r1)).savings_fraction
        s2 = compute_tco(TcoParams(direct, cxl, dram, device, platform, r2)).savings_fraction
        assert s2 >= s1 >= 0.0
        # Nonincreasing in device cost (here: independent of it).
        s3 = compute_tco(
            TcoParams(direct, cxl, dram, device * 2 + 1, platform, r1)
        ).savings_fraction
        assert s3 <= s1 + 1e-12


def test_scale_invariance_of_currency():
    rnd = random.Random(5)
    for _ in range(500):
        p = _params(
            dram_cost_per_gb=rnd.uniform(0.1, 10),
            cxl_device_cost=rnd.uniform(0, 2000),
            platform_base_cost=rnd.uniform(0, 20000),
            compression_ratio=rnd.uniform(1, 4),
        )
        scaled = TcoParams(
            p.direct_dram_gb, p.cxl_dram_gb,
            p.dram_cost_per_gb * 7.3, p.cxl_device_cost * 7.3,
            p.platform_base_cost * 7.3, p.compression_ratio,
        )
        assert compute_tco(p).savings_fraction == pytest.approx(
            compute_tco(scaled).savings_fraction, abs=1e-12
        )


def test_validation_errors():
    with pytest.raises(ValueError):
        compute_tco(_params(direct_dram_gb=0.0))
    with pytest.raises(ValueError):
        compute_tco(_params(cxl_dram_gb=-1.0))
    with pytest.raises(ValueError):
        compute_tco(_params(compression_ratio=0.5))
    with pytest.raises(ValueError):
        compute_tco(_params(dram_cost_per_gb=-0.1))


def test_sweep_matches_elementwise_and_preserves_order():
    p = _params()
    ratios = [1.0, 2.0, 3.0]
    reports = sweep(p, ratios)
    assert len(reports) == 3
    savings = [r.savings_fraction for r in reports]
    assert savings == sorted(savings)
    for ratio, report in zip(ratios, reports):
        direct = compute_tco(_params(compression_ratio=ratio))
        assert report == direct


def test_sweep_empty_and_duplicates():
    assert sweep(_params(), []) == []
    dup = sweep(_params(), [2.0, 2.0])
    assert dup[0] == dup[1]


def test_sweep_rejects_sub_unity_ratio():
    with pytest.raises(ValueError):
        sweep(_params(), [1.0, 0.9])
