"""Random deployment, range-disc connectivity and the multipath parent DAG."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from wsnsim.config import SimConfig
from wsnsim.errors import NoPathFound, TopologyDisconnected

HEADER = "# wsn-topology v1"


@dataclass(frozen=True)
class NodeSite:
    id: int
    position: tuple[float, float]


@dataclass(frozen=True)
class Topology:
    sites: tuple[NodeSite, ...]
    sink_id: int
    tx_range: float
    neighbors: dict[int, tuple[int, ...]]
    parents: dict[int, tuple[int, ...]]
    hops: dict[int, int]  # BFS hop distance to the sink

    def __len__(self):
        return len(self.sites)

    def distance(self, u: int, v: int) -> float:
        (x1, y1), (x2, y2) = self.sites[u].position, self.sites[v].position
        return math.hypot(x1 - x2, y1 - y2)

    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {s.id: [] for s in self.sites}
        for node, ps in self.parents.items():
            for p in ps:
                kids[p].append(node)
        return {k: tuple(v) for k, v in kids.items()}

    def to_text(self) -> str:
        lines = [HEADER]
        for s in self.sites:
            x, y = s.position
            ps = ",".join(str(p) for p in self.parents[s.id]) or "-"
            lines.append(f"{s.id} {x:.6f} {y:.6f} {int(s.id == self.sink_id)} {ps}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), newline="\n")


def _hop_distances(neighbors: dict[int, tuple[int, ...]], sink: int) -> dict[int, int]:
    dist = {sink: 0}
    frontier = deque([sink])
    while frontier:
        u = frontier.popleft()
        for v in neighbors[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                frontier.append(v)
    return dist


def topology_from_positions(positions: Sequence[tuple[float, float]], sink_id: int,
                            tx_range: float) -> Topology:
    """Connect nodes within ``tx_range`` and layer parents by hop count.

    Every neighbour strictly closer to the sink (in hops) becomes a parent.
    Raises TopologyDisconnected listing the nodes with no route.
    """
    n = len(positions)
    if not 0 <= sink_id < n:
        raise ValueError(f"sink {sink_id} not among {n} nodes")
    pos = np.asarray(positions, dtype=float).reshape(n, 2)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adjacent = dist <= tx_range
    np.fill_diagonal(adjacent, False)
    neighbors = {i: tuple(int(j) for j in np.flatnonzero(adjacent[i])) for i in range(n)}

    hops = _hop_distances(neighbors, sink_id)
    unreachable = [i for i in range(n) if i not in hops]
    if unreachable:
        raise TopologyDisconnected(unreachable)
    parents = {i: tuple(j for j in neighbors[i] if hops[j] < hops[i]) for i in range(n)}
    sites = tuple(NodeSite(i, (float(pos[i, 0]), float(pos[i, 1]))) for i in range(n))
    return Topology(sites, sink_id, float(tx_range), neighbors, parents, hops)


def build_topology(config: SimConfig, seed: int) -> Topology:
    if config.node_count < 2 or config.field_side <= 0 or config.tx_range <= 0:
        raise ValueError("need >= 2 nodes, a positive field side and a positive range")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, config.field_side, size=(config.node_count, 2))
    if config.sink == "center":
        centre = config.field_side / 2
        sink = int(np.argmin(np.hypot(pos[:, 0] - centre, pos[:, 1] - centre)))
    else:
        sink = int(config.sink)
    return topology_from_positions(pos, sink, config.tx_range)


def find_path_length(topology: Topology, source: int, timeout: int | None = None) -> int:
    """Hop count of the best route to the sink found within ``timeout`` expansions.

    Neighbours are expanded outward from ``source`` one node per budget unit;
    every time the sink turns up, the shorter hop count is kept. With no
    budget limit this is the BFS hop distance.
    """
    if not 0 <= source < len(topology.sites):
        raise ValueError(f"unknown node {source}")
    if source == topology.sink_id:
        return 0
    best = None
    seen = {source: 0}
    frontier = deque([source])
    budget = math.inf if timeout is None else timeout
    while frontier and budget > 0:
        k = frontier.popleft()
        budget -= 1
        for nb in topology.neighbors[k]:
            length = seen[k] + 1
            if nb == topology.sink_id:
                if best is None or length < best:
                    best = length
            elif nb not in seen:
                seen[nb] = length
                frontier.append(nb)
        if best is not None and (not frontier or seen[frontier[0]] + 1 >= best):
            break
    if best is None:
        raise NoPathFound(f"no route from {source} to sink {topology.sink_id}")
    return best


def average_path_length(topology: Topology, timeout: int | None = None) -> dict[int, float]:
    """Mean discovered path length per BFS hop bucket, over non-sink sources."""
    buckets: dict[int, list[int]] = {}
    for s in topology.sites:
        if s.id == topology.sink_id:
            continue
        buckets.setdefault(topology.hops[s.id], []).append(
            find_path_length(topology, s.id, timeout))
    if not buckets:
        return {0: 0.0}
    return {d: sum(v) / len(v) for d, v in sorted(buckets.items())}
