import random

import pytest
from hypothesis import given, strategies as st

from wsnsim.errors import InvalidPriority
from wsnsim.packet import Packet, PacketHeader
from wsnsim.queueing import Queue, QueueSet, classify, dequeue_next, enqueue, peek_next


def pkt(src=1, prio=0, deadline=100, seq=0):
    return Packet(PacketHeader(prio, src, seq, deadline), created_at=0)


class ReferenceBuffer:
    """Plain list, sorted on every pop: (rank, deadline, arrival stamp)."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []
        self.stamp = 0

    def enqueue(self, packet, designator):
        if len(self.items) >= self.capacity:
            return False
        self.stamp += 1
        self.items.append((int(designator), packet.deadline, self.stamp, packet))
        return True

    def dequeue(self):
        if not self.items:
            return None
        self.items.sort(key=lambda item: item[:3])
        return self.items.pop(0)[3]


def run_trace(rng, capacity=8, ops=60):
    """Random interleaving on both models; returns mismatches and peak occupancy."""
    qs, ref = QueueSet(capacity), ReferenceBuffer(capacity)
    mismatches, peak = 0, 0
    for seq in range(ops):
        if rng.random() < 0.6:
            transit = rng.random() < 0.5
            prio = rng.randrange(3 if transit else 2)
            p = pkt(src=rng.randrange(4) if transit else 9, prio=prio,
                    deadline=rng.randrange(50), seq=seq)
            d = classify(p, 9)
            if qs.enqueue(p, d) != ref.enqueue(p, d):
                mismatches += 1
        else:
            if qs.dequeue_next() is not ref.dequeue():
                mismatches += 1
        peak = max(peak, qs.occupancy)
    while qs.occupancy:
        if qs.dequeue_next() is not ref.dequeue():
            mismatches += 1
    return mismatches, peak


def test_classify_examples():
    assert classify(pkt(src=5, prio=1), 9) is Queue.T1
    assert classify(pkt(src=9, prio=0), 9) is Queue.O0
    with pytest.raises(InvalidPriority):
        classify(pkt(src=9, prio=2), 9)
    with pytest.raises(InvalidPriority):
        classify(pkt(src=5, prio=3), 9)


def test_enqueue_boundary_and_tail_drop():
    qs = QueueSet(8)
    assert enqueue(qs, pkt(), Queue.O0) and qs.occupancy == 1
    for _ in range(7):
        assert enqueue(qs, pkt(), Queue.T0)
    assert qs.occupancy == 8
    assert not enqueue(qs, pkt(), Queue.T0)
    assert qs.drop_count == 1 and qs.occupancy == 8


def test_transit_outranks_earlier_deadline():
    qs = QueueSet()
    t2 = pkt(src=5, prio=2, deadline=10)
    o0 = pkt(src=9, prio=0, deadline=2)
    qs.enqueue(o0, Queue.O0)
    qs.enqueue(t2, Queue.T2)
    assert peek_next(qs) is t2


def test_edf_inside_one_queue():
    qs = QueueSet()
    ps = [pkt(src=9, prio=1, deadline=d) for d in (50, 30, 90)]
    for p in ps:
        qs.enqueue(p, Queue.O1)
    assert peek_next(qs) is ps[1]
    assert dequeue_next(qs) is ps[1]
    assert [dequeue_next(qs) for _ in range(2)] == [ps[0], ps[2]]


def test_ties_go_to_first_arrival():
    qs = QueueSet()
    first, second = pkt(src=3, deadline=10), pkt(src=1, deadline=10)
    qs.enqueue(first, Queue.T0)
    qs.enqueue(second, Queue.T0)
    assert dequeue_next(qs) is first


def test_empty():
    qs = QueueSet()
    assert peek_next(qs) is None and dequeue_next(qs) is None


def test_hundred_packet_trace_matches_reference():
    assert run_trace(random.Random(11), capacity=100, ops=200)[0] == 0


@given(st.integers(0, 2 ** 32), st.integers(1, 12))
def test_reference_model_property(seed, capacity):
    mismatches, peak = run_trace(random.Random(seed), capacity)
    assert mismatches == 0 and peak <= capacity


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 2), st.integers(0, 99))))
def test_peek_then_dequeue_consistent(ops):
    qs = QueueSet()
    for add, prio, deadline in ops:
        if add:
            qs.enqueue(pkt(prio=prio, deadline=deadline), Queue(prio))
        else:
            head = qs.peek_next()
            assert qs.dequeue_next() is head
        assert sum(qs.lengths().values()) == qs.occupancy <= qs.capacity
