"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
gathered into an "acceptance criteria" section at the end of the session.
The sweep-based criteria take a couple of minutes.
"""

import filecmp
import random
import statistics
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

import conftest
from test_queueing import run_trace
from wsnsim.cli import cmd_run
from wsnsim.config import SimConfig, parse_config
from wsnsim.engine import connected_seeds, energy_tx, run_simulation, summarize
from wsnsim.errors import AlphaOutOfRange
from wsnsim.packet import PacketHeader, PiggybackFields, decode_header, encode_header
from wsnsim.scheduler import Job, brute_force_min_lateness, edf_schedule
from wsnsim.topology import average_path_length, build_topology, find_path_length

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
SWEEP_THRESHOLDS = (0.05, 0.5, 1.0, 1.5, 3.0)
SEEDS = 10


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def ratio_sweep():
    """Ten connected seeds at each threshold, rows ordered by achieved r."""
    cfg = parse_config(SCENARIOS / "service_ratio.conf")
    seeds = connected_seeds(cfg, SEEDS)
    start = time.perf_counter()
    rows = []
    for threshold in SWEEP_THRESHOLDS:
        point = cfg.replace(ratio_threshold=threshold)
        rows.append(summarize(threshold, [run_simulation(point, s) for s in seeds]))
    rows.sort(key=lambda row: row.mean_r)
    return cfg, rows, time.perf_counter() - start


def test_c01_edf_matches_exhaustive_search():
    rng = random.Random(2024)
    start = time.perf_counter()
    mismatches, positive = 0, 0
    instances = 1000
    for _ in range(instances):
        jobs = []
        for i in range(rng.randint(1, 5)):
            arrival = rng.randrange(10)
            jobs.append(Job(i, arrival, rng.randint(1, 4), arrival + rng.randint(1, 12)))
        edf = edf_schedule(jobs).max_lateness
        best = brute_force_min_lateness(jobs)
        mismatches += edf != best
        positive += best > 0
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30
    assert record(1, "EDF max lateness equals exhaustive minimum", ok,
                  f"{instances} instances, {positive} with positive lateness, "
                  f"{mismatches} mismatches, {elapsed:.1f}s")


def test_c03_drop_falls_with_service_ratio(ratio_sweep):
    cfg, rows, elapsed = ratio_sweep
    drops = [row.drop_percent for row in rows]
    rs = [row.mean_r for row in rows]
    monotone = all(b <= a for a, b in zip(drops, drops[1:]))
    spread = drops[0] - drops[-1]
    # achieved-r coverage: each end within a factor of two of 0.5 and 3.0
    covered = rs[0] <= 1.0 and rs[-1] >= 1.5
    ok = (len(rows) >= 5 and cfg.node_count == 100 and monotone and spread >= 10
          and covered and elapsed < 300)
    detail = ", ".join(f"r={r:.2f}:{d:.1f}%" for r, d in zip(rs, drops))
    assert record(3, "drop % non-increasing in achieved service ratio", ok,
                  f"{detail}; spread {spread:.1f} pp; {elapsed:.0f}s")


def test_c04_success_rises_with_service_ratio(ratio_sweep):
    _, rows, _ = ratio_sweep
    wins = [row.success_rate for row in rows]
    strictly = all(b > a for a, b in zip(wins, wins[1:]))
    rise = 100 * (wins[-1] - wins[0])
    ok = strictly and rise >= 5
    detail = ", ".join(f"r={row.mean_r:.2f}:{100 * w:.1f}%" for row, w in zip(rows, wins))
    assert record(4, "success rate strictly increasing in service ratio", ok,
                  f"{detail}; rise {rise:.1f} pp")


def test_c05_rate_control_saves_congestion_energy():
    cfg = parse_config(SCENARIOS / "overload.conf")
    seeds = connected_seeds(cfg, SEEDS)
    wins, overloaded = 0, 0
    for seed in seeds:
        on = run_simulation(cfg.replace(rate_control_enabled=True), seed)
        off = run_simulation(cfg.replace(rate_control_enabled=False), seed)
        overloaded += on.offered_load >= 2 * on.sink_capacity
        wasted_on = on.energy.congestion + on.energy.implicit_congestion
        wasted_off = off.energy.congestion + off.energy.implicit_congestion
        wins += wasted_on < wasted_off and on.dropped_queue < off.dropped_queue
    ok = wins >= 9 and overloaded == len(seeds)
    assert record(5, "control on beats off on congestion energy and queue drops", ok,
                  f"{wins}/{len(seeds)} pairs; {overloaded} runs at >= 2x sink capacity")


def test_c07_dequeue_order_matches_reference():
    rng = random.Random(7)
    traces = 10_000
    mismatches = sum(run_trace(rng, rng.randint(1, 12))[0] for _ in range(traces))
    assert record(7, "dequeue order matches reference model", mismatches == 0,
                  f"{traces} random traces, {mismatches} mismatches")


def test_c08_path_length_matches_bfs():
    cfg = SimConfig()
    seeds = connected_seeds(cfg, 20)
    mismatches, checked = 0, 0
    buckets: dict[int, list[float]] = {}
    for seed in seeds:
        topo = build_topology(cfg, seed)
        g = nx.Graph()
        g.add_nodes_from(range(len(topo)))
        g.add_edges_from((u, v) for u, vs in topo.neighbors.items() for v in vs)
        truth = nx.single_source_shortest_path_length(g, topo.sink_id)
        for node in range(len(topo)):
            checked += 1
            mismatches += find_path_length(topo, node) != truth[node]
        for hop, mean in average_path_length(topo).items():
            buckets.setdefault(hop, []).append(mean)
    table = ", ".join(f"{h}:{statistics.fmean(v):.2f}" for h, v in sorted(buckets.items()))
    assert record(8, "discovered path length equals BFS hop distance", mismatches == 0,
                  f"{len(seeds)} topologies, {checked} nodes, {mismatches} mismatches; "
                  f"per-bucket means {table}")


def test_c09_run_output_is_byte_identical(tmp_path):
    cfg = SimConfig()
    seed = connected_seeds(cfg, 1)[0]
    a = cmd_run(cfg, seed, tmp_path / "a")
    b = cmd_run(cfg, seed, tmp_path / "b")
    names = ["metrics.csv", "timeseries.csv", "topology.txt"]
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    ok = match == names
    assert record(9, "repeated run writes identical files", ok,
                  f"identical: {', '.join(match)}; differing: {mismatch + errors or 'none'}")


def test_c10_header_codec_roundtrip():
    rng = np.random.default_rng(10)
    n = 1_000_000
    cols = [rng.integers(0, 256, n), rng.integers(0, 1 << 16, n), rng.integers(0, 1 << 16, n),
            rng.integers(0, 1 << 32, n), rng.integers(0, 256, n),
            rng.uniform(0, 600, n), rng.uniform(0, 600, n)]
    header_bad = 0
    for prio, src, seq, dl, qlen, sched, srv in zip(*(c.tolist() for c in cols)):
        h = PacketHeader(prio, src, seq, dl, PiggybackFields(qlen, sched, srv))
        # expected rates worked out here: 2 pkt/s steps, rounded down, 510 ceiling
        expect = PacketHeader(prio, src, seq, dl, PiggybackFields(
            qlen, min(510.0, 2.0 * (sched // 2)), min(510.0, 2.0 * (srv // 2))))
        header_bad += decode_header(encode_header(h)) != expect
    m = 100_000
    raw = rng.integers(0, 256, (m, 12), dtype=np.uint8)
    bytes_bad = sum(encode_header(decode_header(row.tobytes())) != row.tobytes() for row in raw)
    ok = header_bad == 0 and bytes_bad == 0
    assert record(10, "header codec roundtrip", ok,
                  f"{n} headers ({header_bad} bad), {m} byte strings ({bytes_bad} bad)")


def test_c12_transmit_energy_law():
    exact = (energy_tx(1, 2, 1), energy_tx(2, 2, 1), energy_tx(3, 4, 1)) == (1, 4, 81)
    rejected = 0
    for alpha in (1.0, 1.999, 5.001, 7.0):
        try:
            energy_tx(1, alpha, 1)
        except AlphaOutOfRange:
            rejected += 1
    ok = exact and rejected == 4
    assert record(12, "transmit energy k*d^alpha", ok,
                  f"exact values {'ok' if exact else 'wrong'}, {rejected}/4 bad alphas rejected")


# Whole-session checks last: they read every run logged so far.

def test_c11_rate_never_below_thirty_percent():
    # sustained triggering: a threshold no ratio can reach
    cfg = SimConfig(ratio_threshold=1000.0, queue_threshold=0, duration_ms=10000)
    run_simulation(cfg, connected_seeds(cfg, 1)[0])
    runs = [r for r in conftest.RUN_LOG if not r["per_step"]]
    low = sum(r["min_fraction"] < r["floor"] for r in runs)
    cap = sum(r["cap"] for r in runs)
    worst = min(r["min_fraction"] for r in runs)
    ok = low == 0 and cap == 0
    assert record(11, "rate never below 30% of initial", ok,
                  f"{len(runs)} runs, lowest fraction {worst:.4f}, {low + cap} violations")


def test_c02_rate_sum_conserved_in_every_run():
    runs = conftest.RUN_LOG
    violations = sum(r["eq1"] for r in runs)
    ok = violations == 0 and len(runs) > 0
    assert record(2, "per-parent rates sum exactly to the node rate", ok,
                  f"{len(runs)} simulation runs, {violations} violating control ticks")


def test_c06_queue_never_overfills():
    rng = random.Random(6)
    traces, peak_excess = 10_000, 0
    for _ in range(traces):
        capacity = rng.randint(1, 12)
        _, peak = run_trace(rng, capacity)
        peak_excess += peak > capacity
    runs = conftest.RUN_LOG
    overfull = sum(r["overfull"] for r in runs)
    sim_excess = sum(r["max_occupancy"] > r["capacity"] for r in runs)
    ok = peak_excess == 0 and overfull == 0 and sim_excess == 0
    assert record(6, "buffer occupancy never exceeds capacity", ok,
                  f"{traces} random traces + {len(runs)} simulation runs, "
                  f"{peak_excess + overfull + sim_excess} violations")
