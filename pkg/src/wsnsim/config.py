"""Simulation parameters and the flat ``key = value`` config format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from wsnsim.errors import InvalidValue, UnknownKey

PACKET_SIZE = 30


@dataclass(frozen=True)
class SimConfig:
    # deployment
    field_side: float = 50.0
    node_count: int = 100
    tx_range: float = 12.0
    sink: str = "center"  # "center" or a node id
    # packets and buffers
    packet_size: int = PACKET_SIZE
    queue_capacity: int = 8
    deadline_class0_ms: int = 200
    deadline_class1_ms: int = 500
    deadline_class2_ms: int = 1000
    # energy
    alpha: float = 2.0
    energy_k: float = 1e-6
    prioritizer_cost: float = 1e-4
    sched_unit_cost: float = 2e-4
    # rate control
    rate_control_enabled: bool = True
    initial_sched_rate: float = 40.0
    ratio_threshold: float = 0.5
    queue_threshold: int = 6
    reduction_factor: float = 0.85
    max_rate_adjustment: float = 0.70
    adjustment_mode: str = "cumulative"  # or "per_step"
    recovery_enabled: bool = False
    recovery_factor: float = 1.02
    service_window_ms: int = 1000
    # traffic
    origination_share: float = 0.5
    weight_o0: float = 2.0
    weight_o1: float = 1.0
    burst_multiplier: float = 1.0
    burst_period_ms: int = 10000
    burst_duty: float = 0.5
    executions: int = 2
    # link
    link_latency_ms: int = 10
    base_loss: float = 0.01
    collision_loss: float = 0.1
    # run
    duration_ms: int = 20000
    measure_interval_ms: int = 1000

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def relative_deadlines(self) -> tuple[int, int, int]:
        return (self.deadline_class0_ms, self.deadline_class1_ms, self.deadline_class2_ms)


def _fail(key, value, why):
    raise InvalidValue(f"{key} = {value!r}: {why}")


def validate(cfg: SimConfig) -> None:
    positive = (
        "field_side", "node_count", "tx_range", "queue_capacity", "energy_k",
        "initial_sched_rate", "ratio_threshold", "service_window_ms", "link_latency_ms",
        "measure_interval_ms", "burst_period_ms", "deadline_class0_ms",
        "deadline_class1_ms", "deadline_class2_ms", "executions", "burst_multiplier",
    )
    for name in positive:
        if getattr(cfg, name) <= 0:
            _fail(name, getattr(cfg, name), "must be positive")
    non_negative = (
        "prioritizer_cost", "sched_unit_cost", "queue_threshold", "duration_ms",
        "base_loss", "collision_loss", "weight_o0", "weight_o1",
    )
    for name in non_negative:
        if getattr(cfg, name) < 0:
            _fail(name, getattr(cfg, name), "must be non-negative")
    if cfg.node_count < 2:
        _fail("node_count", cfg.node_count, "need at least 2 nodes")
    if cfg.packet_size != PACKET_SIZE:
        _fail("packet_size", cfg.packet_size, f"packets are fixed at {PACKET_SIZE} bytes")
    if not 2 <= cfg.alpha <= 5:
        _fail("alpha", cfg.alpha, "attenuation factor must lie in [2, 5]")
    if not 0 < cfg.reduction_factor < 1:
        _fail("reduction_factor", cfg.reduction_factor, "must lie in (0, 1)")
    if not 0 <= cfg.max_rate_adjustment < 1:
        _fail("max_rate_adjustment", cfg.max_rate_adjustment, "must lie in [0, 1)")
    if cfg.adjustment_mode not in ("cumulative", "per_step"):
        _fail("adjustment_mode", cfg.adjustment_mode, "expected cumulative or per_step")
    if cfg.recovery_factor < 1:
        _fail("recovery_factor", cfg.recovery_factor, "must be >= 1")
    if not 0 <= cfg.origination_share <= 1:
        _fail("origination_share", cfg.origination_share, "must lie in [0, 1]")
    if cfg.weight_o0 + cfg.weight_o1 <= 0:
        _fail("weight_o0", cfg.weight_o0, "class weights must not both be zero")
    if not 0 < cfg.burst_duty <= 1:
        _fail("burst_duty", cfg.burst_duty, "must lie in (0, 1]")
    if cfg.base_loss + cfg.collision_loss > 1:
        _fail("collision_loss", cfg.collision_loss, "base_loss + collision_loss exceeds 1")
    if cfg.initial_sched_rate > 510:
        _fail("initial_sched_rate", cfg.initial_sched_rate, "exceeds the 510 pkt/s wire range")
    if cfg.sink != "center":
        try:
            sink = int(cfg.sink)
        except ValueError:
            _fail("sink", cfg.sink, "expected 'center' or a node id")
        if not 0 <= sink < cfg.node_count:
            _fail("sink", cfg.sink, "node id out of range")


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _coerce(name: str, kind: type, text: str):
    text = text.strip()
    try:
        if kind is bool:
            return _BOOL[text.lower()]
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except (KeyError, ValueError):
        raise InvalidValue(f"{name} = {text!r}: expected {kind.__name__}") from None


_TYPES = {"float": float, "int": int, "bool": bool, "str": str}


def _field_types() -> dict[str, type]:
    return {f.name: _TYPES[f.type] for f in fields(SimConfig)}


def parse_config_text(text: str) -> dict[str, object]:
    types = _field_types()
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidValue(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, types[key], value)
    return values


def parse_config(path: str | Path | None = None,
                 overrides: Mapping[str, str] | None = None) -> SimConfig:
    """Build a config from defaults, then the file at ``path``, then ``overrides``.

    Override values are strings, coerced the same way as file values.
    """
    values: dict[str, object] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    if overrides:
        types = _field_types()
        for key, text in overrides.items():
            if key not in types:
                raise UnknownKey(f"unknown key {key!r}")
            values[key] = _coerce(key, types[key], str(text))
    return SimConfig(**values)


def dump_config(cfg: SimConfig) -> str:
    lines = ["# wsnsim config"]
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
