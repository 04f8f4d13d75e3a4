"""Scheduling-rate bookkeeping and the service-ratio congestion controller.

Rates are held as integers in units of 1/256 pkt/s so that a node's
scheduling rate is always the exact sum of its per-parent allocations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from wsnsim.errors import ZeroSchedulingRate

ONE = 256  # fixed-point quanta per pkt/s


def to_fixed(rate: float) -> int:
    return int(round(rate * ONE))


def from_fixed(quanta: int) -> float:
    return quanta / ONE


@dataclass(frozen=True)
class RateControlParams:
    ratio_threshold: float = 0.5
    queue_threshold: int = 6
    reduction_factor: float = 0.85
    max_rate_adjustment: float = 0.70
    service_window: int = 1000
    per_step_cap: bool = False
    recovery_factor: float | None = None

    def __post_init__(self):
        if self.ratio_threshold <= 0:
            raise ValueError("ratio_threshold must be positive")
        if not 0 < self.reduction_factor < 1:
            raise ValueError("reduction_factor must lie in (0, 1)")
        if not 0 <= self.max_rate_adjustment < 1:
            raise ValueError("max_rate_adjustment must lie in [0, 1)")

    def floor_quanta(self, initial_quanta: int) -> int:
        """Smallest total rate the cumulative cap allows, in quanta."""
        return math.ceil(round((1.0 - self.max_rate_adjustment) * initial_quanta, 6))


@dataclass(frozen=True)
class RateState:
    per_parent: Mapping[int, int]  # parent id -> quanta
    sched_quanta: int
    initial_quanta: int
    originating_rate: float = 0.0
    service_rate: float = 0.0
    last_ratio: float | None = None

    @classmethod
    def initial(cls, parents: Iterable[int], sched_rate: float) -> "RateState":
        """Split ``sched_rate`` evenly over ``parents``; leftover quanta go to the first ones."""
        parents = list(parents)
        if not parents:
            return cls({}, 0, 0)
        total = to_fixed(sched_rate)
        share, extra = divmod(total, len(parents))
        alloc = {p: share + (1 if i < extra else 0) for i, p in enumerate(parents)}
        return cls(alloc, total, total)

    @property
    def sched_rate(self) -> float:
        return from_fixed(self.sched_quanta)

    def rates(self) -> dict[int, float]:
        return {p: from_fixed(q) for p, q in self.per_parent.items()}

    def conserved(self) -> bool:
        return self.sched_quanta == sum(self.per_parent.values())


@dataclass(frozen=True)
class RateChange:
    parent: int
    old_rate: float
    new_rate: float


def aggregate_sched_rate(per_parent: Mapping[int, float]) -> float:
    return from_fixed(sum(to_fixed(r) for r in per_parent.values()))


def service_ratio(service_rate: float, sched_rate: float) -> float:
    if sched_rate < 0:
        raise ValueError("scheduling rate must be non-negative")
    if sched_rate == 0:
        raise ZeroSchedulingRate("scheduling rate is zero")
    return service_rate / sched_rate


def measure_service_rate(samples: Sequence[tuple[int, int]], window: int) -> float:
    """Mean of 1000/delay (pkt/s) over (arrival_ms, departure_ms) pairs in a window."""
    if window <= 0:
        raise ValueError("window must be positive")
    if not samples:
        return 0.0
    return sum(1000.0 / (dep - arr) for arr, dep in samples) / len(samples)


def _scale(per_parent: Mapping[int, int], target: int) -> dict[int, int]:
    """Rescale allocations so they sum to exactly ``target`` quanta."""
    total = sum(per_parent.values())
    if total == 0:
        return dict(per_parent)
    scaled = {p: q * target // total for p, q in per_parent.items()}
    short = target - sum(scaled.values())
    for p in list(scaled)[:short]:
        scaled[p] += 1
    return scaled


def control_step(rs: RateState, params: RateControlParams, queue_occupancy: int,
                 ratio: float | None = None) -> tuple[RateState, list[RateChange]]:
    """One control cycle.

    Triggers when the ratio (``rs.last_ratio`` unless ``ratio`` is given)
    is under the threshold or ``queue_occupancy`` exceeds the queue
    threshold; every per-parent rate is then cut by the reduction factor,
    never taking the total below the cap floor. A zero scheduling rate
    skips the cycle.
    """
    if rs.sched_quanta == 0:
        return rs, []
    if ratio is None:
        ratio = rs.last_ratio
    triggered = (ratio is not None and ratio < params.ratio_threshold) or (
        queue_occupancy > params.queue_threshold)

    if triggered:
        factor = params.reduction_factor
        if params.per_step_cap:
            factor = max(factor, 1.0 - params.max_rate_adjustment)
            floor = 0
        else:
            floor = params.floor_quanta(rs.initial_quanta)
        new = {p: int(q * factor) for p, q in rs.per_parent.items()}
        if sum(new.values()) < floor:
            new = _scale(rs.per_parent, min(floor, rs.sched_quanta))
    elif params.recovery_factor and rs.sched_quanta < rs.initial_quanta:
        target = min(rs.initial_quanta, int(rs.sched_quanta * params.recovery_factor) + 1)
        new = _scale(rs.per_parent, target)
    else:
        return rs, []

    changes = [RateChange(p, from_fixed(rs.per_parent[p]), from_fixed(q))
               for p, q in new.items() if q != rs.per_parent[p]]
    if not changes:
        return rs, []
    return replace(rs, per_parent=new, sched_quanta=sum(new.values())), changes


def originating_rate(rs: RateState, priority_weights: Mapping[int, float],
                     share: float = 0.5) -> dict[int, float]:
    """Split ``share * Sch_r`` over originating classes by weight."""
    if any(w < 0 for w in priority_weights.values()):
        raise ValueError("weights must be non-negative")
    total_w = sum(priority_weights.values())
    if total_w <= 0:
        raise ValueError("weights must sum to a positive value")
    budget = rs.sched_quanta * share
    return {c: from_fixed(int(budget * w / total_w)) for c, w in priority_weights.items()}
