"""Command-line front door: bench-compress, simulate, tco, validate-budgets.

Exit codes: 0 success, 1 usage/parse/I-O error, 2 budget violation (the run
itself completed; one or more envelope checks failed).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from statistics import geometric_mean

from . import configio, lz4block, tco as tco_model
from .device import (
    Device,
    OCP_ACCESS_P50_NS,
    OCP_DECOMPRESS_GBPS,
    OCP_TAIL_P9999_NS,
    modeled_decompress_bandwidth,
    validate_budgets,
)
from .errors import ConfigError, CxlTierError
from .host import HostEmulator, drive
from .linecodec import LINE_BYTES, METADATA_OVERHEAD_BYTES, compress_line
from .tier import BLOCK_META_BYTES, StoreMode

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2


@dataclass(frozen=True)
class FileRatio:
    name: str
    logical_bytes: int
    physical_bytes: int
    ratio: float


@dataclass(frozen=True)
class CorpusReport:
    mode: str
    page_size: int
    files: list[FileRatio]
    geomean_ratio: float


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 means budget violation here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _compressed_file_size(data: bytes, mode: StoreMode, page_size: int) -> tuple[int, int]:
    """(logical, physical) for one dump, zero-padded to the chunk size."""
    if mode is StoreMode.CACHELINE:
        chunk = LINE_BYTES
    else:
        chunk = page_size
    if len(data) % chunk:
        data = data + b"\x00" * (chunk - len(data) % chunk)
    logical = len(data)
    physical = 0
    if mode is StoreMode.CACHELINE:
        for off in range(0, logical, LINE_BYTES):
            c = compress_line(data[off:off + LINE_BYTES])
            physical += c.size_class + METADATA_OVERHEAD_BYTES
    else:
        for off in range(0, logical, page_size):
            blk = lz4block.compress_block(data[off:off + page_size], page_size)
            physical += blk.compressed_len + BLOCK_META_BYTES
    return logical, physical


def cmd_bench_compress(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise ConfigError(f"{corpus} is not a directory")
    paths = sorted(p for p in corpus.iterdir() if p.is_file())
    if not paths:
        raise ConfigError(f"corpus {corpus} contains no files")
    mode = StoreMode(args.mode)
    files = []
    for path in paths:
        try:
            data = path.read_bytes()
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if not data:
            raise ConfigError(f"corpus file {path} is empty")
        logical, physical = _compressed_file_size(data, mode, args.page_size)
        files.append(FileRatio(path.name, logical, physical, logical / physical))
    report = CorpusReport(
        mode=mode.value,
        page_size=args.page_size,
        files=files,
        geomean_ratio=geometric_mean([f.ratio for f in files]),
    )

    out_dir = _out_dir(args)
    if args.format == "csv":
        with open(out_dir / "corpus_report.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("name,logical_bytes,physical_bytes,ratio\n")
            for f in files:
                fh.write(f"{f.name},{f.logical_bytes},{f.physical_bytes},{f.ratio!r}\n")
    else:
        configio.dump_report(report, out_dir / "corpus_report.json")
    for f in files:
        print(f"{f.name}: ratio {f.ratio:.4f} ({f.logical_bytes} -> {f.physical_bytes} bytes)")
    print(f"geomean ratio: {report.geomean_ratio:.4f}")
    return EXIT_OK


def _run_scenario(args):
    scenario = configio.scenario_from_file(args.scenario, seed_override=args.seed)
    device = Device(scenario.device)
    host = HostEmulator(
        device,
        scenario.host.direct_capacity_pages,
        promote_after=scenario.host.promote_after,
    )
    run_report = drive(host, scenario.workload, scenario.output.sample_interval)
    budget = validate_budgets(scenario.device, device.stats)
    return scenario, device, run_report, budget


def _print_budget(cfg, budget) -> None:
    bw = modeled_decompress_bandwidth(cfg)
    print(
        f"access  p50 {budget.p50_ns:.1f} ns <= {OCP_ACCESS_P50_NS:.0f} ns: "
        f"{'PASS' if budget.access_ok else 'FAIL'}"
    )
    print(
        f"tail    p99.99 {budget.p9999_ns:.1f} ns <= {OCP_TAIL_P9999_NS:.0f} ns: "
        f"{'PASS' if budget.tail_ok else 'FAIL'}"
    )
    print(
        f"bandwidth {bw:.1f} GB/s >= {OCP_DECOMPRESS_GBPS:.0f} GB/s: "
        f"{'PASS' if budget.bandwidth_ok else 'FAIL'}"
    )


def cmd_simulate(args) -> int:
    scenario, _, run_report, budget = _run_scenario(args)
    out_dir = _out_dir(args)
    configio.dump_report(run_report, out_dir / scenario.output.run_report)
    configio.write_telemetry_csv(
        run_report.telemetry_series, out_dir / scenario.output.telemetry_csv
    )
    configio.dump_report(budget, out_dir / scenario.output.budget_report)
    print(
        f"ops {run_report.ops_executed}, demotions {run_report.demotions}, "
        f"promotions {run_report.promotions}, shadow_verified {run_report.shadow_verified}"
    )
    _print_budget(scenario.device, budget)
    ok = budget.access_ok and budget.tail_ok and budget.bandwidth_ok
    return EXIT_OK if ok else EXIT_BUDGET


def cmd_validate_budgets(args) -> int:
    scenario, _, _, budget = _run_scenario(args)
    if args.out:
        configio.dump_report(budget, _out_dir(args) / scenario.output.budget_report)
    _print_budget(scenario.device, budget)
    ok = budget.access_ok and budget.tail_ok and budget.bandwidth_ok
    return EXIT_OK if ok else EXIT_BUDGET


def cmd_tco(args) -> int:
    params = configio.tco_params_from_tree(configio.load_json(args.params))
    ratios = args.ratios
    try:
        reports = tco_model.sweep(params, ratios)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out_dir = _out_dir(args)
    configio.write_tco_csv(ratios, reports, out_dir / "tco_sweep.csv")
    configio.dump_report(reports, out_dir / "tco_report.json")
    for ratio, report in zip(ratios, reports):
        print(f"ratio {ratio:.2f}: savings {report.savings_fraction * 100.0:.2f}%")
    return EXIT_OK


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ratio_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cxltier", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench-compress", help="compression ratios over a corpus directory")
    bench.add_argument("corpus", help="directory of raw binary dump files")
    bench.add_argument("--mode", choices=["cacheline", "block"], default="cacheline")
    bench.add_argument("--page-size", type=int, choices=[1024, 4096], default=4096)
    bench.set_defaults(func=cmd_bench_compress)

    sim = sub.add_parser("simulate", help="run a scenario and emit run/telemetry/budget reports")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.set_defaults(func=cmd_simulate)

    tco = sub.add_parser("tco", help="cost-per-effective-GB sweep")
    tco.add_argument("params", help="TCO parameter JSON file")
    tco.add_argument("--ratios", type=_ratio_list, default=[1.0, 1.5, 2.0, 2.5, 3.0])
    tco.set_defaults(func=cmd_tco)

    val = sub.add_parser("validate-budgets", help="check the latency/bandwidth envelope")
    val.add_argument("scenario", help="scenario JSON file")
    val.set_defaults(func=cmd_validate_budgets)

    for p in (bench, sim, tco, val):
        p.add_argument("--out", default=None, help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, default=None, help="override the workload seed")
        p.add_argument("--format", choices=["text", "csv"], default="text")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CxlTierError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
