"""Config ingestion and report emission: JSON key/value trees and CSV series.

Configs and reports share one representation: a UTF-8 JSON document whose
keys are exactly the dataclass field names of the owning module's types.
Report emission is deterministic (fixed key order, no timestamps), so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from enum import Enum
from pathlib import Path

from .device import DeviceConfig, LatencyModel
from .errors import ConfigError
from .host import DEFAULT_PROMOTE_AFTER
from .tco import TcoParams
from .tier import StoreMode
from .workload import ContentProfile, WorkloadKind, WorkloadSpec, load_trace


def load_json(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tree = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a key/value tree")
    return tree


def _check_keys(tree: dict, allowed: set[str], context: str) -> None:
    unknown = set(tree) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")


def _enum_value(enum_cls, raw, context: str):
    try:
        return enum_cls(raw)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{context}: {raw!r} is not one of [{valid}]") from None


# -- device ------------------------------------------------------------------


def latency_from_tree(tree: dict) -> LatencyModel:
    fields = {f.name for f in dataclasses.fields(LatencyModel)}
    _check_keys(tree, fields, "latency")
    try:
        return LatencyModel(**{k: float(v) for k, v in tree.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"latency: {exc}") from None


def device_config_from_tree(tree: dict) -> DeviceConfig:
    fields = {f.name for f in dataclasses.fields(DeviceConfig)}
    _check_keys(tree, fields, "device")
    kwargs = dict(tree)
    if "mode" in kwargs:
        kwargs["mode"] = _enum_value(StoreMode, kwargs["mode"], "device.mode")
    if "latency" in kwargs:
        if not isinstance(kwargs["latency"], dict):
            raise ConfigError("device.latency must be a key/value tree")
        kwargs["latency"] = latency_from_tree(kwargs["latency"])
    try:
        cfg = DeviceConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"device: {exc}") from None
    cfg.validate()
    return cfg


# -- workload ------------------------------------------------------------------


def workload_from_tree(tree: dict, base_dir: Path) -> WorkloadSpec:
    allowed = {f.name for f in dataclasses.fields(WorkloadSpec)} | {"trace_path"}
    allowed.discard("trace_ops")
    _check_keys(tree, allowed, "workload")
    kwargs = dict(tree)
    kind = _enum_value(WorkloadKind, kwargs.get("kind", "zipfian"), "workload.kind")
    kwargs["kind"] = kind
    if "content_profile" in kwargs:
        kwargs["content_profile"] = _enum_value(
            ContentProfile, kwargs["content_profile"], "workload.content_profile"
        )
    trace_path = kwargs.pop("trace_path", None)
    if kind is WorkloadKind.TRACE:
        if trace_path is None:
            raise ConfigError("workload: trace kind requires trace_path")
        spec = load_trace(
            base_dir / trace_path,
            seed=int(kwargs.get("seed", 1)),
            content_profile=kwargs.get("content_profile", ContentProfile.ZERO_HEAVY),
        )
    else:
        try:
            spec = WorkloadSpec(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"workload: {exc}") from None
    try:
        spec.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"workload: {exc}") from None
    return spec


# -- scenario -------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class HostParams:
    direct_capacity_pages: int
    promote_after: int = DEFAULT_PROMOTE_AFTER


@dataclasses.dataclass(frozen=True)
class OutputSpec:
    run_report: str = "run_report.json"
    telemetry_csv: str = "telemetry.csv"
    budget_report: str = "budget_report.json"
    sample_interval: int | None = None


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    device: DeviceConfig
    workload: WorkloadSpec
    host: HostParams
    output: OutputSpec


def scenario_from_file(path: str | Path, *, seed_override: int | None = None) -> ScenarioConfig:
    path = Path(path)
    tree = load_json(path)
    _check_keys(tree, {"device", "workload", "host", "output"}, str(path))
    for required in ("device", "workload", "host"):
        if required not in tree:
            raise ConfigError(f"{path}: missing '{required}' section")

    workload_tree = dict(tree["workload"])
    if seed_override is not None:
        workload_tree["seed"] = seed_override

    host_tree = dict(tree["host"])
    _check_keys(host_tree, {f.name for f in dataclasses.fields(HostParams)}, "host")
    if "direct_capacity_pages" not in host_tree:
        raise ConfigError("host: direct_capacity_pages is required")

    output_tree = dict(tree.get("output", {}))
    _check_keys(output_tree, {f.name for f in dataclasses.fields(OutputSpec)}, "output")

    return ScenarioConfig(
        device=device_config_from_tree(tree["device"]),
        workload=workload_from_tree(workload_tree, path.parent),
        host=HostParams(**host_tree),
        output=OutputSpec(**output_tree),
    )


# -- tco -------------------------------------------------------------------------


def tco_params_from_tree(tree: dict) -> TcoParams:
    fields = {f.name for f in dataclasses.fields(TcoParams)}
    _check_keys(tree, fields, "tco")
    if "compression_ratio" not in tree:
        tree = dict(tree)
        tree["compression_ratio"] = 2.0
    try:
        params = TcoParams(**{k: float(v) for k, v in tree.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tco: {exc}") from None
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(f"tco: {exc}") from None
    return params


# -- report emission ---------------------------------------------------------------


def to_tree(obj):
    """Dataclass (or container of dataclasses) to a JSON-ready tree."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_tree(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [to_tree(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_tree(v) for k, v in obj.items()}
    return obj


def dump_report(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_tree(obj), indent=2) + "\n", encoding="utf-8")


def render_report(obj) -> str:
    return json.dumps(to_tree(obj), indent=2)


def write_telemetry_csv(samples, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ordinal", "logical_bytes", "physical_bytes", "compression_ratio"])
        for s in samples:
            writer.writerow([s.ordinal, s.logical_bytes, s.physical_bytes,
                             repr(s.compression_ratio)])


def write_tco_csv(ratios, reports, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ratio", "savings_fraction"])
        for ratio, report in zip(ratios, reports):
            writer.writerow([repr(float(ratio)), repr(report.savings_fraction)])
