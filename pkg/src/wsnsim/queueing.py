"""Per-node prioritizer and the five-queue buffer.

Three transit queues outrank two originating queues; inside each group a
lower class index wins. Inside a queue packets leave in EDF order.
"""

from __future__ import annotations

import heapq
from enum import IntEnum

from wsnsim.errors import InvalidPriority
from wsnsim.packet import Packet

TRANSIT_CLASSES = 3
ORIGINATING_CLASSES = 2


class Queue(IntEnum):
    """Queue designators; the integer value is the service rank."""

    T0 = 0
    T1 = 1
    T2 = 2
    O0 = 3
    O1 = 4


def classify(packet: Packet, at_node: int) -> Queue:
    prio = packet.header.priority_number
    if packet.header.source_address != at_node:
        if not 0 <= prio < TRANSIT_CLASSES:
            raise InvalidPriority(f"transit priority {prio} not in 0..{TRANSIT_CLASSES - 1}")
        return Queue(prio)
    if not 0 <= prio < ORIGINATING_CLASSES:
        raise InvalidPriority(
            f"originating priority {prio} not in 0..{ORIGINATING_CLASSES - 1}")
    return Queue(TRANSIT_CLASSES + prio)


class QueueSet:
    """Shared-capacity buffer holding the five priority queues of one node."""

    __slots__ = ("capacity", "queues", "occupancy", "drop_count", "arrival_counter",
                 "dequeued_count")

    def __init__(self, capacity: int = 8):
        self.capacity = capacity
        self.queues: list[list] = [[] for _ in Queue]
        self.occupancy = 0
        self.drop_count = 0
        self.arrival_counter = 0
        self.dequeued_count = 0

    def __len__(self):
        return self.occupancy

    def enqueue(self, packet: Packet, designator: Queue) -> bool:
        """Insert ``packet``; False means it was tail-dropped."""
        if self.occupancy >= self.capacity:
            self.drop_count += 1
            return False
        h = packet.header
        self.arrival_counter += 1
        heapq.heappush(self.queues[designator],
                       (h.absolute_deadline, self.arrival_counter,
                        h.source_address, h.sequence, packet))
        self.occupancy += 1
        return True

    def peek_next(self) -> Packet | None:
        if self.occupancy:
            for q in self.queues:
                if q:
                    return q[0][4]
        return None

    def dequeue_next(self) -> Packet | None:
        if self.occupancy:
            for q in self.queues:
                if q:
                    self.occupancy -= 1
                    self.dequeued_count += 1
                    return heapq.heappop(q)[4]
        return None

    def lengths(self) -> dict[Queue, int]:
        return {d: len(self.queues[d]) for d in Queue}


def enqueue(qs: QueueSet, packet: Packet, designator: Queue) -> bool:
    return qs.enqueue(packet, designator)


def peek_next(qs: QueueSet) -> Packet | None:
    return qs.peek_next()


def dequeue_next(qs: QueueSet) -> Packet | None:
    return qs.dequeue_next()
