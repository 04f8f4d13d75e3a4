import struct

import pytest
from hypothesis import given, strategies as st

from wsnsim.errors import FieldOutOfRange, TruncatedHeader
from wsnsim.packet import (
    HEADER_SIZE, PACKET_SIZE, Packet, PacketHeader, PiggybackFields, decode_header,
    encode_header, quantize_rate, quantized,
)


def test_all_zero_header():
    assert encode_header(PacketHeader()) == bytes(12)


def test_hand_packed_example():
    h = PacketHeader(1, 258, 1, 1000, PiggybackFields(8, 4.0, 2.0))
    wire = encode_header(h)
    assert wire == bytes.fromhex("01 01 02 00 01 00 00 03 E8 08 02 01")
    assert decode_header(wire) == h


def test_layout_against_manual_packing():
    h = PacketHeader(2, 0xBEEF, 0x1234, 0xDEADBEEF, PiggybackFields(7, 100.0, 33.0))
    manual = bytes([2, 0xBE, 0xEF, 0x12, 0x34, 0xDE, 0xAD, 0xBE, 0xEF, 7, 50, 16])
    assert encode_header(h) == manual


@pytest.mark.parametrize("header", [
    PacketHeader(piggyback=PiggybackFields(queue_length=300)),
    PacketHeader(priority_number=256),
    PacketHeader(source_address=70000),
    PacketHeader(sequence=-1),
    PacketHeader(absolute_deadline=2 ** 32),
    PacketHeader(piggyback=PiggybackFields(sched_rate=-1.0)),
])
def test_out_of_range_fields_rejected(header):
    with pytest.raises(FieldOutOfRange):
        encode_header(header)


@pytest.mark.parametrize("n", [0, 11, 13])
def test_wrong_length_rejected(n):
    with pytest.raises(TruncatedHeader):
        decode_header(bytes(n))


def test_rate_quantization():
    assert quantize_rate(0.0) == 0
    assert quantize_rate(1.99) == 0
    assert quantize_rate(2.0) == 1
    assert quantize_rate(509.0) == 254
    assert quantize_rate(10_000.0) == 255


def test_packet_is_thirty_bytes():
    p = Packet(PacketHeader(0, 1, 1, 500), created_at=0)
    assert p.serialized_size() == PACKET_SIZE == HEADER_SIZE + 18
    assert p.deadline == 500


rates = st.floats(0, 600, allow_nan=False)
headers = st.builds(
    PacketHeader,
    st.integers(0, 255), st.integers(0, 0xFFFF), st.integers(0, 0xFFFF),
    st.integers(0, 0xFFFFFFFF),
    st.builds(PiggybackFields, st.integers(0, 255), rates, rates),
)


@given(headers)
def test_roundtrip_up_to_quantization(h):
    back = decode_header(encode_header(h))
    assert back == quantized(h)
    for orig, got in ((h.piggyback.sched_rate, back.piggyback.sched_rate),
                      (h.piggyback.service_rate, back.piggyback.service_rate)):
        assert got % 2 == 0 and got <= orig and (orig - got < 2 or got == 510)


@given(st.binary(min_size=12, max_size=12))
def test_every_bit_pattern_decodes_and_reencodes(b):
    assert encode_header(decode_header(b)) == b
    assert struct.unpack(">BHHIBBB", b)[0] == decode_header(b).priority_number
