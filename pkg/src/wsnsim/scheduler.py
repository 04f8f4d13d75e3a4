"""The scheduling unit: rate-paced EDF dispatch plus EDF theory helpers.

``edf_schedule`` and ``brute_force_min_lateness`` work on unit-slice job
sets and exist to check EDF's max-lateness optimality; packet dispatch in
the simulator goes through ``next_dispatch``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from wsnsim.errors import InstanceTooLarge
from wsnsim.packet import Packet
from wsnsim.queueing import QueueSet


@dataclass(frozen=True)
class TaskParams:
    worst_case_time: float
    period: float

    def __post_init__(self):
        if self.worst_case_time <= 0 or self.period <= 0:
            raise ValueError("computation time and period must be positive")


@dataclass(frozen=True)
class Utilization:
    value: float
    schedulable: bool


def utilization(tasks: Sequence[TaskParams]) -> Utilization:
    u = sum(t.worst_case_time / t.period for t in tasks)
    return Utilization(u, u <= 1)


@dataclass(frozen=True)
class Job:
    id: int
    arrival: int
    computation: int
    absolute_deadline: int

    def __post_init__(self):
        if self.computation <= 0:
            raise ValueError("computation must be positive")
        if self.absolute_deadline <= self.arrival:
            raise ValueError("deadline must come after arrival")


@dataclass
class EDFResult:
    slices: list[tuple[int, int]]  # (t, job id) for the slice [t, t+1)
    completion: dict[int, int]
    max_lateness: int


def edf_schedule(jobs: Sequence[Job]) -> EDFResult:
    """Preemptive unit-slice EDF; ties broken by job id."""
    remaining = {j.id: j.computation for j in jobs}
    pending = sorted(jobs, key=lambda j: j.arrival)
    slices: list[tuple[int, int]] = []
    completion: dict[int, int] = {}
    if not jobs:
        return EDFResult(slices, completion, 0)
    t = pending[0].arrival
    while len(completion) < len(jobs):
        ready = [j for j in pending if j.arrival <= t and remaining[j.id] > 0]
        if not ready:
            t = min(j.arrival for j in pending if remaining[j.id] > 0)
            continue
        job = min(ready, key=lambda j: (j.absolute_deadline, j.id))
        slices.append((t, job.id))
        remaining[job.id] -= 1
        t += 1
        if remaining[job.id] == 0:
            completion[job.id] = t
    lateness = max(completion[j.id] - j.absolute_deadline for j in jobs)
    return EDFResult(slices, completion, lateness)


MAX_ORACLE_JOBS = 6
MAX_ORACLE_WORK = 24


def brute_force_min_lateness(jobs: Sequence[Job]) -> int:
    """Minimum achievable max lateness over every unit-slice schedule.

    Each slice runs any released, unfinished job or idles. Exhaustive over
    the horizon ``max(arrival) + total work``, which always admits a
    schedule that finishes everything.
    """
    if len(jobs) > MAX_ORACLE_JOBS:
        raise InstanceTooLarge(f"{len(jobs)} jobs > {MAX_ORACLE_JOBS}")
    work = sum(j.computation for j in jobs)
    if work > MAX_ORACLE_WORK:
        raise InstanceTooLarge(f"total computation {work} > {MAX_ORACLE_WORK}")
    if not jobs:
        return 0
    arrivals = tuple(j.arrival for j in jobs)
    deadlines = tuple(j.absolute_deadline for j in jobs)
    horizon = max(arrivals) + work
    inf = float("inf")

    @lru_cache(maxsize=None)
    def best(t: int, remaining: tuple[int, ...]) -> float:
        if not any(remaining):
            return -inf
        if t >= horizon:
            return inf
        result = best(t + 1, remaining)  # idle
        for i, r in enumerate(remaining):
            if r and arrivals[i] <= t:
                rest = remaining[:i] + (r - 1,) + remaining[i + 1:]
                late = t + 1 - deadlines[i] if r == 1 else -inf
                result = min(result, max(late, best(t + 1, rest)))
        return result

    return int(best(min(arrivals), tuple(j.computation for j in jobs)))


@dataclass
class SchedulerState:
    sched_rate: float
    next_release_time: int = 0
    served_count: int = 0
    busy_time: int = 0

    def gap_ms(self) -> int:
        return max(1, round(1000.0 / self.sched_rate))


def next_dispatch(state: SchedulerState, qs: QueueSet, now: int) -> Packet | None:
    """Release one packet if the release instant has come and work is queued.

    Idle instants bank no credit: the next release is one gap after the
    later of the scheduled release and ``now``.
    """
    if now < state.next_release_time or not qs.occupancy or state.sched_rate <= 0:
        return None
    packet = qs.dequeue_next()
    gap = state.gap_ms()
    state.next_release_time = max(state.next_release_time, now) + gap
    state.served_count += 1
    state.busy_time += gap
    return packet
