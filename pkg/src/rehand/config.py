"""Scenario configuration (TOML) with field-level validation."""

from __future__ import annotations

import re
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

FAULT_KINDS = ("drop", "corrupt", "replay")
FLOWS = (
    "InitialRequest", "InitialResponseCore", "InitialResponseENB", "HeNBKeyDelivery",
    "InitialResponseHeNB", "FastRequest", "FastChallenge", "FastConfirm",
)


@dataclass
class TopologyConfig:
    regions: int = 2
    henbs_per_region: int = 4
    blind_factors: int = 8


@dataclass
class LatencyConfig:
    alpha_ms: float = 4.36
    beta_ms: float = 261.76
    x2_ms: float = 0.0
    core_ms: float = 0.0


@dataclass
class MobilityConfig:
    speed_kmh: float = 120.0
    region_diameter_km: float = 2.0
    warrant_lifetime_s: float = 600.0
    handover_rate_hz: float = 1.0
    # "exponential": lifetimes drawn with mean warrant_lifetime_s; "fixed": exactly that
    lifetime_policy: str = "exponential"


@dataclass
class AccumulatorConfig:
    d: int = 6
    r: int = 1536


@dataclass
class FaultConfig:
    kind: str
    ue: int
    handover: int
    flow: str
    bit: int = 0


@dataclass
class RevocationConfig:
    ue: int
    time_s: float


@dataclass
class CostConfig:
    t_rl: list = field(default_factory=lambda: [60, 120, 180, 240, 300, 600, 900, 1200, 1800, 2400, 3000, 3600])
    speeds: list = field(default_factory=lambda: [0, 50, 100, 120, 150, 200, 250, 300, 350, 400, 450, 500])
    r: float = 2.0
    revoked_total: float = 1_000_000
    n_enb: float = 22_000
    c_alpha: float = 4.36
    c_beta: float = 261.76
    frame_bits: int = 512
    mode: str = "linear"
    amortize_revocation: bool = True
    include_tracing: bool = False
    series_speed: float = 0.0
    ue_timings: dict = field(default_factory=dict)
    system_timings: dict = field(default_factory=dict)
    lengths: dict = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    seed: int = 0
    ue_count: int = 1
    handovers_per_ue: int = 10
    slot_length_s: float = 600.0
    theta_ms: int = 5000
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    accumulator: AccumulatorConfig = field(default_factory=AccumulatorConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    faults: list = field(default_factory=list)
    revocations: list = field(default_factory=list)


_LIST_ITEMS = {"faults": FaultConfig, "revocations": RevocationConfig}


def _line_of(text: str, key: str) -> int | None:
    leaf = key.split(".")[-1].split("[")[0]
    m = re.search(rf"^\s*{re.escape(leaf)}\s*=", text, re.MULTILINE)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _coerce(path: str, value: Any, typ: Any, text: str):
    line = _line_of(text, path)
    if typ in (int, "int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}", line)
        return value
    if typ in (float, "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}", line)
        return float(value)
    if typ in (bool, "bool"):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}", line)
        return value
    if typ in (str, "str"):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}", line)
        return value
    if typ in (list, "list"):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}", line)
        return value
    if typ in (dict, "dict"):
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected a table, got {value!r}", line)
        return value
    raise AssertionError(typ)


def _build(cls, data: dict, path: str, text: str):
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}{key}", "unknown key", _line_of(text, key))
    kwargs = {}
    for name, f in known.items():
        full = f"{path}{name}"
        if name not in data:
            if f.default is MISSING and f.default_factory is MISSING:
                raise ConfigError(full, "missing required key")
            continue
        value = data[name]
        if name in _LIST_ITEMS and cls is ScenarioConfig:
            if not isinstance(value, list):
                raise ConfigError(full, "expected an array of tables", _line_of(text, name))
            kwargs[name] = [
                _build(_LIST_ITEMS[name], item if isinstance(item, dict) else {}, f"{full}[{i}].", text)
                for i, item in enumerate(value)
            ]
            continue
        sub = f.default_factory() if f.default_factory is not MISSING else None
        if is_dataclass(sub):
            if not isinstance(value, dict):
                raise ConfigError(full, "expected a table", _line_of(text, name))
            kwargs[name] = _build(type(sub), value, f"{full}.", text)
        else:
            kwargs[name] = _coerce(full, value, f.type, text)
    return cls(**kwargs)


def _validate(cfg: ScenarioConfig) -> None:
    def need(cond: bool, path: str, msg: str):
        if not cond:
            raise ConfigError(path, msg)

    need(cfg.seed >= 0, "seed", "must be non-negative")
    need(cfg.ue_count >= 1, "ue_count", "must be at least 1")
    need(cfg.handovers_per_ue >= 1, "handovers_per_ue", "must be at least 1")
    need(cfg.slot_length_s > 0, "slot_length_s", "must be positive")
    need(cfg.theta_ms >= 0, "theta_ms", "must be non-negative")
    t = cfg.topology
    need(t.regions >= 1, "topology.regions", "must be at least 1")
    need(t.henbs_per_region >= 1, "topology.henbs_per_region", "must be at least 1")
    need(t.blind_factors >= 1, "topology.blind_factors", "must be at least 1")
    for name in ("alpha_ms", "beta_ms", "x2_ms", "core_ms"):
        need(getattr(cfg.latency, name) >= 0, f"latency.{name}", "must be non-negative")
    m = cfg.mobility
    need(m.speed_kmh >= 0, "mobility.speed_kmh", "must be non-negative")
    need(m.region_diameter_km > 0, "mobility.region_diameter_km", "must be positive")
    need(m.warrant_lifetime_s > 0, "mobility.warrant_lifetime_s", "must be positive")
    need(m.handover_rate_hz > 0, "mobility.handover_rate_hz", "must be positive")
    need(m.lifetime_policy in ("exponential", "fixed"), "mobility.lifetime_policy",
         "must be 'exponential' or 'fixed'")
    need(cfg.accumulator.d >= 1, "accumulator.d", "must be at least 1")
    need(cfg.accumulator.r >= 1, "accumulator.r", "must be at least 1")
    for i, f in enumerate(cfg.faults):
        p = f"faults[{i}]"
        need(f.kind in FAULT_KINDS, f"{p}.kind", f"must be one of {', '.join(FAULT_KINDS)}")
        need(f.flow in FLOWS, f"{p}.flow", f"must be one of {', '.join(FLOWS)}")
        need(0 <= f.ue < cfg.ue_count, f"{p}.ue", "no such UE")
        need(f.handover >= 0, f"{p}.handover", "must be non-negative")
        need(f.bit >= 0, f"{p}.bit", "must be non-negative")
    for i, r in enumerate(cfg.revocations):
        need(0 <= r.ue < cfg.ue_count, f"revocations[{i}].ue", "no such UE")
        need(r.time_s >= 0, f"revocations[{i}].time_s", "must be non-negative")
    c = cfg.costs
    need(c.mode in ("linear", "ceil"), "costs.mode", "must be 'linear' or 'ceil'")
    need(bool(c.t_rl) and all(isinstance(x, (int, float)) and x > 0 for x in c.t_rl),
         "costs.t_rl", "must be a non-empty list of positive numbers")
    need(bool(c.speeds) and all(isinstance(x, (int, float)) and x >= 0 for x in c.speeds),
         "costs.speeds", "must be a non-empty list of non-negative numbers")


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError("<document>", str(exc), int(m.group(1)) if m else None) from None
    cfg = _build(ScenarioConfig, data, "", text)
    _validate(cfg)
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return parse_config(text)
