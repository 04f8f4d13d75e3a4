"""Deterministic discrete-event loop.

Every node runs the prioritizer, the five-queue buffer and a rate-paced
EDF scheduling unit. Control fields ride in packet headers; children
overhear their parents' transmissions and throttle their own per-parent
rates when a parent reports a low service ratio or a long queue.
"""

from __future__ import annotations

import heapq
import logging
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from wsnsim.config import SimConfig
from wsnsim.errors import AlphaOutOfRange, NotAdjacent, TopologyDisconnected
from wsnsim.packet import (
    PACKET_SIZE, Packet, PacketHeader, PiggybackFields, decode_header, encode_header,
)
from wsnsim.queueing import QueueSet, classify
from wsnsim.ratecontrol import (
    RateControlParams, RateState, control_step, originating_rate,
)
from wsnsim.scheduler import SchedulerState, next_dispatch
from wsnsim.topology import Topology, average_path_length, build_topology

log = logging.getLogger(__name__)

ORIGINATE, ARRIVAL, DISPATCH, CONTROL, MEASURE, END = range(6)
EVENT_NAMES = ("PacketOrigination", "PacketArrival", "DispatchTick", "ControlTick",
               "MeasurementTick", "SimEnd")


def energy_tx(distance: float, alpha: float, k: float = 1.0) -> float:
    """Transmit energy ``k * d**alpha`` for a hop of ``distance`` metres."""
    if not 2 <= alpha <= 5:
        raise AlphaOutOfRange(f"alpha={alpha} outside [2, 5]")
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return k * distance ** alpha


@dataclass
class EnergyLedger:
    prioritizer: float = 0.0
    scheduling_unit: float = 0.0
    congestion: float = 0.0
    implicit_congestion: float = 0.0
    transmission: float = 0.0

    @property
    def total(self) -> float:
        return self.prioritizer + self.scheduling_unit + self.transmission

    def __add__(self, other: "EnergyLedger") -> "EnergyLedger":
        return EnergyLedger(
            self.prioritizer + other.prioritizer,
            self.scheduling_unit + other.scheduling_unit,
            self.congestion + other.congestion,
            self.implicit_congestion + other.implicit_congestion,
            self.transmission + other.transmission,
        )


def charge_processing(ledger: EnergyLedger, component: str, packets: int,
                      per_packet_cost: float) -> None:
    if per_packet_cost < 0:
        raise ValueError("cost must be non-negative")
    if component not in ("prioritizer", "scheduling_unit"):
        raise ValueError(f"unknown component {component!r}")
    setattr(ledger, component, getattr(ledger, component) + packets * per_packet_cost)


@dataclass
class MetricsReport:
    seed: int
    originated: int = 0
    delivered: int = 0
    dropped_queue: int = 0
    dropped_link: int = 0
    missed_deadline: int = 0
    late_delivered: int = 0
    in_flight: int = 0
    mean_r: float = 0.0
    mean_service_ratio: dict[int, float] = field(default_factory=dict)
    energy: EnergyLedger = field(default_factory=EnergyLedger)
    node_energy: dict[int, EnergyLedger] = field(default_factory=dict)
    path_length_table: dict[int, float] = field(default_factory=dict)
    mean_hops_delivered: float = 0.0
    timeseries: list[tuple[int, int, int, float, float, float]] = field(default_factory=list)
    # self-checks gathered while running
    eq1_violations: int = 0
    cap_violations: int = 0
    capacity_violations: int = 0
    size_violations: int = 0
    max_occupancy: int = 0
    min_rate_fraction: float = 1.0
    conservation_ok: bool = True
    clock_ok: bool = True
    offered_load: float = 0.0
    sink_capacity: float = 0.0
    trace: list[str] | None = None

    @property
    def drop_percent(self) -> float:
        if not self.originated:
            return 0.0
        lost = self.dropped_queue + self.dropped_link + self.missed_deadline
        return 100.0 * lost / self.originated

    @property
    def success_rate(self) -> float:
        return self.delivered / self.originated if self.originated else 0.0


class _Node:
    __slots__ = ("id", "parents", "hop_energy", "children", "qs", "sched", "rate",
                 "ledger", "views", "srv_sum", "srv_count", "tick_pending", "seq",
                 "class_rates", "r_sum", "r_n", "ratio")

    def __init__(self, node_id: int, parents: tuple[int, ...], hop_energy: dict[int, float],
                 children: tuple[int, ...], cfg: SimConfig):
        self.id = node_id
        self.parents = parents
        self.hop_energy = hop_energy
        self.children = children
        self.qs = QueueSet(cfg.queue_capacity)
        self.rate = RateState.initial(parents, cfg.initial_sched_rate)
        self.sched = SchedulerState(self.rate.sched_rate)
        self.ledger = EnergyLedger()
        self.views: dict[int, PiggybackFields] = {}
        self.srv_sum = 0.0
        self.srv_count = 0
        self.tick_pending = False
        self.seq = 0
        self.class_rates: dict[int, float] = {}
        self.r_sum = 0.0
        self.r_n = 0
        self.ratio: float | None = None


class Simulation:
    """One replication. Build, then call :meth:`run` once."""

    def __init__(self, config: SimConfig, seed: int, topology: Topology | None = None,
                 trace: bool = False):
        self.cfg = config
        self.seed = seed
        self.topology = topology if topology is not None else build_topology(config, seed)
        self.rng = random.Random((seed << 8) | 0x5A)
        self.params = RateControlParams(
            ratio_threshold=config.ratio_threshold,
            queue_threshold=config.queue_threshold,
            reduction_factor=config.reduction_factor,
            max_rate_adjustment=config.max_rate_adjustment,
            service_window=config.service_window_ms,
            per_step_cap=config.adjustment_mode == "per_step",
            recovery_factor=config.recovery_factor if config.recovery_enabled else None,
        )
        self.weights = {0: config.weight_o0, 1: config.weight_o1}
        self.deadlines = config.relative_deadlines
        self.report = MetricsReport(seed, trace=[] if trace else None)
        self.events: list = []
        self._tiebreak = 0
        self.now = 0

        topo = self.topology
        kids = topo.children()
        self.sink = topo.sink_id
        self.nodes: list[_Node] = []
        for s in topo.sites:
            ps = topo.parents[s.id]
            hop_energy = {p: energy_tx(topo.distance(s.id, p), config.alpha, config.energy_k)
                          for p in topo.neighbors[s.id]}
            node = _Node(s.id, ps, hop_energy, kids[s.id], config)
            node.class_rates = originating_rate(node.rate, self.weights, config.origination_share)
            self.nodes.append(node)
        self.sources = [n for n in self.nodes if n.id != self.sink]

    # -- event plumbing -------------------------------------------------
    def push(self, time: int, kind: int, node: int, payload=None) -> None:
        self._tiebreak += 1
        heapq.heappush(self.events, (time, self._tiebreak, kind, node, payload))

    def _trace(self, time, kind, node, packet):
        src, seq = (packet.header.source_address, packet.header.sequence) if packet else ("-", "-")
        self.report.trace.append(f"{time} {EVENT_NAMES[kind]} {node} {src} {seq}")

    def _origination_period(self, rate: float, now: int) -> int:
        cfg = self.cfg
        if cfg.burst_multiplier != 1.0 and (now % cfg.burst_period_ms) < cfg.burst_duty * cfg.burst_period_ms:
            rate *= cfg.burst_multiplier
        return max(1, round(1000.0 / rate))

    # -- energy attribution ---------------------------------------------
    def _blame(self, packet: Packet, attr: str) -> None:
        nodes = self.nodes
        for nid, joules in packet.spent:
            ledger = nodes[nid].ledger
            setattr(ledger, attr, getattr(ledger, attr) + joules)

    # -- per-hop machinery -------------------------------------------------
    def _admit(self, node: _Node, packet: Packet, now: int) -> None:
        """Prioritizer: classify into a queue, tail-drop when the buffer is full."""
        cost = self.cfg.prioritizer_cost
        node.ledger.prioritizer += cost
        packet.spent.append((node.id, cost))
        packet.arrived_at = now
        packet.is_transit_at_current_hop = packet.header.source_address != node.id
        qs = node.qs
        if not qs.enqueue(packet, classify(packet, node.id)):
            self.report.dropped_queue += 1
            self._blame(packet, "congestion")
            return
        if qs.occupancy > self.report.max_occupancy:
            self.report.max_occupancy = qs.occupancy
            if qs.occupancy > qs.capacity:
                self.report.capacity_violations += 1
        if not node.tick_pending:
            node.tick_pending = True
            self.push(max(now, node.sched.next_release_time), DISPATCH, node.id)

    def choose_parent(self, node_id: int) -> int:
        parents = self.nodes[node_id].parents
        return parents[0] if len(parents) == 1 else parents[self.rng.randrange(len(parents))]

    def deliver_hop(self, packet: Packet, frm: int, to: int, now: int) -> bool:
        """Stamp piggyback fields, transmit, and schedule arrival unless the link loses it."""
        sender = self.nodes[frm]
        if to not in sender.hop_energy:
            raise NotAdjacent(f"{frm} and {to} are not within range")
        cfg = self.cfg
        h = packet.header
        packet.header = PacketHeader(
            h.priority_number, h.source_address, h.sequence, h.absolute_deadline,
            PiggybackFields(sender.qs.occupancy, sender.rate.sched_rate, sender.rate.service_rate),
        )
        wire = encode_header(packet.header)
        if len(wire) + packet.payload_size != PACKET_SIZE:
            self.report.size_violations += 1
        heard = decode_header(wire).piggyback
        nodes = self.nodes
        for c in sender.children:
            nodes[c].views[frm] = heard

        joules = sender.hop_energy[to]
        sender.ledger.transmission += joules
        packet.spent.append((frm, joules))
        packet.hops += 1

        u = self.rng.random()
        if u < cfg.base_loss:
            self.report.dropped_link += 1
            return False
        if to != self.sink:
            receiver = nodes[to].qs
            if u < cfg.base_loss + cfg.collision_loss * receiver.occupancy / receiver.capacity:
                self.report.dropped_link += 1
                self._blame(packet, "congestion")
                return False
        self.push(now + cfg.link_latency_ms, ARRIVAL, to, packet)
        return True

    # -- handlers ---------------------------------------------------------
    def _on_originate(self, node: _Node, cls: int, now: int) -> None:
        node.seq = (node.seq + 1) & 0xFFFF
        header = PacketHeader(cls, node.id, node.seq, now + self.deadlines[cls])
        packet = Packet(header, now)
        self.report.originated += 1
        if self.report.trace is not None:
            self._trace(now, ORIGINATE, node.id, packet)
        self._admit(node, packet, now)
        rate = node.class_rates.get(cls, 0.0)
        if rate > 0:
            self.push(now + self._origination_period(rate, now), ORIGINATE, node.id, cls)

    def _on_arrival(self, node: _Node, packet: Packet, now: int) -> None:
        if node.id == self.sink:
            rep = self.report
            rep.delivered += 1
            rep.mean_hops_delivered += packet.hops
            if now > packet.header.absolute_deadline:
                rep.late_delivered += 1
                self._blame(packet, "implicit_congestion")
            return
        self._admit(node, packet, now)

    def _on_dispatch(self, node: _Node, now: int) -> None:
        node.tick_pending = False
        qs = node.qs
        while True:
            head = qs.peek_next()
            if head is None or head.header.absolute_deadline >= now:
                break
            qs.dequeue_next()
            self.report.missed_deadline += 1
            self._blame(head, "implicit_congestion")
        packet = next_dispatch(node.sched, qs, now)
        if packet is not None:
            cost = self.cfg.sched_unit_cost
            node.ledger.scheduling_unit += cost
            packet.spent.append((node.id, cost))
            node.srv_sum += 1000.0 / (now - packet.arrived_at + self.cfg.link_latency_ms)
            node.srv_count += 1
            self.deliver_hop(packet, node.id, self.choose_parent(node.id), now)
        if qs.occupancy:
            node.tick_pending = True
            self.push(max(now, node.sched.next_release_time), DISPATCH, node.id)

    def _parent_signals(self, node: _Node) -> tuple[float, int]:
        """Lowest service ratio and longest queue overheard from this node's parents."""
        ratio, qlen = math.inf, 0
        for p in node.parents:
            view = node.views.get(p)
            if view is None:
                continue
            if view.sched_rate > 0:
                r = view.service_rate / view.sched_rate
                if r < ratio:
                    ratio = r
            if view.queue_length > qlen:
                qlen = view.queue_length
        return ratio, qlen

    def _on_control(self, now: int) -> None:
        cfg = self.cfg
        rep = self.report
        for node in self.sources:
            rs = node.rate
            if node.srv_count:
                service = node.srv_sum / node.srv_count
                node.srv_sum, node.srv_count = 0.0, 0
                ratio = service / rs.sched_rate if rs.sched_quanta else None
            else:
                service, ratio = rs.service_rate, None
            node.ratio = ratio
            if ratio is not None:
                node.r_sum += ratio
                node.r_n += 1
            rs = RateState(rs.per_parent, rs.sched_quanta, rs.initial_quanta,
                           rs.originating_rate, service, ratio)
            if cfg.rate_control_enabled:
                parent_ratio, parent_qlen = self._parent_signals(node)
                rs, changes = control_step(rs, self.params, parent_qlen, ratio=parent_ratio)
                if changes:
                    node.sched.sched_rate = rs.sched_rate
                    node.class_rates = originating_rate(rs, self.weights, cfg.origination_share)
            node.rate = rs
            if not rs.conserved():
                rep.eq1_violations += 1
            fraction = rs.sched_quanta / rs.initial_quanta
            if fraction < rep.min_rate_fraction:
                rep.min_rate_fraction = fraction
            if rs.sched_quanta < self.params.floor_quanta(rs.initial_quanta) and \
                    self.params.per_step_cap is False:
                rep.cap_violations += 1
        self.push(now + cfg.service_window_ms, CONTROL, -1)

    def _on_measure(self, now: int) -> None:
        rows = self.report.timeseries
        for node in self.sources:
            # idle window: no departures, so the ratio is undefined
            ratio = node.ratio if node.ratio is not None else math.nan
            rows.append((now, node.id, node.qs.occupancy, node.rate.sched_rate,
                         node.rate.service_rate, ratio))
        self.push(now + self.cfg.measure_interval_ms, MEASURE, -1)

    # -- main loop --------------------------------------------------------
    def _seed_events(self) -> None:
        rng = self.rng
        for node in self.sources:
            for cls in sorted(node.class_rates):
                rate = node.class_rates[cls]
                if rate > 0:
                    period = max(1, round(1000.0 / rate))
                    self.push(rng.randrange(period), ORIGINATE, node.id, cls)
        self.push(self.cfg.service_window_ms, CONTROL, -1)
        self.push(self.cfg.measure_interval_ms, MEASURE, -1)

    def run(self) -> MetricsReport:
        cfg = self.cfg
        rep = self.report
        end = cfg.duration_ms
        self._seed_events()
        nodes = self.nodes
        events = self.events
        pop = heapq.heappop
        tracing = rep.trace is not None
        last = 0
        while events:
            time, _, kind, nid, payload = events[0]
            if time >= end:
                break
            pop(events)
            if time < last:
                rep.clock_ok = False
            last = time
            self.now = time
            if kind == DISPATCH:
                if tracing:
                    self._trace(time, kind, nid, None)
                self._on_dispatch(nodes[nid], time)
            elif kind == ARRIVAL:
                if tracing:
                    self._trace(time, kind, nid, payload)
                self._on_arrival(nodes[nid], payload, time)
            elif kind == ORIGINATE:
                self._on_originate(nodes[nid], payload, time)
            elif kind == CONTROL:
                if tracing:
                    self._trace(time, kind, nid, None)
                self._on_control(time)
            elif kind == MEASURE:
                if tracing:
                    self._trace(time, kind, nid, None)
                self._on_measure(time)
        if tracing:
            self._trace(end, END, -1, None)
        return self._finish()

    def _finish(self) -> MetricsReport:
        rep = self.report
        queued = sum(n.qs.occupancy for n in self.nodes)
        in_transit = sum(1 for e in self.events if e[2] == ARRIVAL)
        rep.in_flight = queued + in_transit
        accounted = (rep.delivered + rep.dropped_queue + rep.dropped_link
                     + rep.missed_deadline + rep.in_flight)
        rep.conservation_ok = accounted == rep.originated
        for n in self.nodes:
            rep.node_energy[n.id] = n.ledger
            rep.energy = rep.energy + n.ledger
            if n.r_n:
                rep.mean_service_ratio[n.id] = n.r_sum / n.r_n
        if rep.mean_service_ratio:
            rep.mean_r = statistics.fmean(rep.mean_service_ratio.values())
        if rep.delivered:
            rep.mean_hops_delivered /= rep.delivered
        rep.path_length_table = average_path_length(self.topology)
        sink_nbrs = [i for i in self.topology.neighbors[self.sink]]
        rep.sink_capacity = sum(self.nodes[i].rate.initial_quanta for i in sink_nbrs) / 256
        rep.offered_load = sum(
            sum(originating_rate(RateState.initial(n.parents, self.cfg.initial_sched_rate),
                                 self.weights, self.cfg.origination_share).values())
            for n in self.sources)
        return rep


def run_simulation(config: SimConfig, seed: int, topology: Topology | None = None,
                   trace: bool = False) -> MetricsReport:
    return Simulation(config, seed, topology, trace).run()


def connected_seeds(config: SimConfig, count: int, start: int = 0) -> list[int]:
    """First ``count`` seeds from ``start`` whose deployment reaches the sink."""
    seeds, seed = [], start
    while len(seeds) < count:
        try:
            build_topology(config, seed)
        except TopologyDisconnected:
            log.info("seed %d: deployment disconnected, skipped", seed)
        else:
            seeds.append(seed)
        seed += 1
    return seeds


def _stderr(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.stdev(values) / math.sqrt(len(values))


@dataclass(frozen=True)
class SweepRow:
    value: object
    runs: int
    mean_r: float
    mean_r_stderr: float
    drop_percent: float
    drop_stderr: float
    success_rate: float
    success_stderr: float


def summarize(value: object, reports: Sequence[MetricsReport]) -> SweepRow:
    rs = [r.mean_r for r in reports]
    drops = [r.drop_percent for r in reports]
    wins = [r.success_rate for r in reports]
    return SweepRow(value, len(reports),
                    statistics.fmean(rs), _stderr(rs),
                    statistics.fmean(drops), _stderr(drops),
                    statistics.fmean(wins), _stderr(wins))


def sweep(config: SimConfig, seeds: Iterable[int], key: str,
          values: Sequence[object]) -> list[SweepRow]:
    """Run every seed at every value of config field ``key``; rows in value order."""
    seeds = list(seeds)
    rows = []
    for value in values:
        cfg = config.replace(**{key: value})
        rows.append(summarize(value, [run_simulation(cfg, s) for s in seeds]))
    return rows


def sweep_service_ratio(config: SimConfig, seeds: Iterable[int],
                        ratio_thresholds: Sequence[float]) -> list[SweepRow]:
    """Sweep the ratio threshold; rows ordered by the service ratio achieved."""
    if len(ratio_thresholds) < 2:
        raise ValueError("need at least two thresholds")
    rows = sweep(config, seeds, "ratio_threshold", ratio_thresholds)
    return sorted(rows, key=lambda row: row.mean_r)
