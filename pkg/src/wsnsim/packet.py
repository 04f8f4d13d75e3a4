"""Packet data model and the 12-byte header codec.

Wire layout, big-endian::

    0      priority number
    1-2    source address
    3-4    per-source sequence number
    5-8    absolute deadline, ms
    9      piggybacked queue length
    10     piggybacked scheduling rate, 2 pkt/s per unit
    11     piggybacked service rate, 2 pkt/s per unit

The remaining 18 bytes of a 30-byte packet are payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from wsnsim.errors import FieldOutOfRange, TruncatedHeader

HEADER_SIZE = 12
PACKET_SIZE = 30
PAYLOAD_SIZE = PACKET_SIZE - HEADER_SIZE
RATE_STEP = 2.0
MAX_WIRE_RATE = 255 * RATE_STEP

_HEADER = struct.Struct(">BHHIBBB")


@dataclass(frozen=True)
class PiggybackFields:
    queue_length: int = 0
    sched_rate: float = 0.0
    service_rate: float = 0.0


@dataclass(frozen=True)
class PacketHeader:
    priority_number: int = 0
    source_address: int = 0
    sequence: int = 0
    absolute_deadline: int = 0
    piggyback: PiggybackFields = field(default_factory=PiggybackFields)


def quantize_rate(rate: float) -> int:
    """Wire byte for a rate: floor to a 2 pkt/s step, saturating at 510 pkt/s."""
    if rate < 0 or rate != rate:
        raise FieldOutOfRange(f"rate {rate} must be non-negative")
    return min(255, int(rate // RATE_STEP))


def _check(name: str, value: int, upper: int) -> None:
    if not isinstance(value, int) or not 0 <= value <= upper:
        raise FieldOutOfRange(f"{name}={value!r} outside 0..{upper}")


def encode_header(header: PacketHeader) -> bytes:
    pb = header.piggyback
    _check("priority_number", header.priority_number, 0xFF)
    _check("source_address", header.source_address, 0xFFFF)
    _check("sequence", header.sequence, 0xFFFF)
    _check("absolute_deadline", header.absolute_deadline, 0xFFFFFFFF)
    _check("queue_length", pb.queue_length, 0xFF)
    return _HEADER.pack(
        header.priority_number,
        header.source_address,
        header.sequence,
        header.absolute_deadline,
        pb.queue_length,
        quantize_rate(pb.sched_rate),
        quantize_rate(pb.service_rate),
    )


def decode_header(data: bytes) -> PacketHeader:
    if len(data) != HEADER_SIZE:
        raise TruncatedHeader(f"header must be {HEADER_SIZE} bytes, got {len(data)}")
    prio, src, seq, deadline, qlen, sched, srv = _HEADER.unpack(data)
    return PacketHeader(prio, src, seq, deadline,
                        PiggybackFields(qlen, sched * RATE_STEP, srv * RATE_STEP))


def quantized(header: PacketHeader) -> PacketHeader:
    """The header as it reads after a trip over the wire."""
    pb = header.piggyback
    return PacketHeader(
        header.priority_number, header.source_address, header.sequence,
        header.absolute_deadline,
        PiggybackFields(pb.queue_length,
                        quantize_rate(pb.sched_rate) * RATE_STEP,
                        quantize_rate(pb.service_rate) * RATE_STEP),
    )


class Packet:
    """A packet in flight. Mutable: hop bookkeeping changes as it travels."""

    __slots__ = ("header", "payload_size", "created_at", "is_transit_at_current_hop",
                 "arrived_at", "hops", "spent")

    def __init__(self, header: PacketHeader, created_at: int, payload_size: int = PAYLOAD_SIZE):
        self.header = header
        self.payload_size = payload_size
        self.created_at = created_at
        self.is_transit_at_current_hop = False
        self.arrived_at = created_at
        self.hops = 0
        # (node id, joules) charged on behalf of this packet, for loss attribution
        self.spent: list[tuple[int, float]] = []

    @property
    def deadline(self) -> int:
        return self.header.absolute_deadline

    def serialized_size(self) -> int:
        return len(encode_header(self.header)) + self.payload_size

    def __repr__(self):
        h = self.header
        return (f"Packet(src={h.source_address}, seq={h.sequence}, prio={h.priority_number}, "
                f"deadline={h.absolute_deadline})")
