"""Property tests for routing, fork partitioning, and packetization."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from nocsim.core import (
    Channel,
    Coord,
    Direction,
    Flit,
    PacketHeader,
    ProtocolError,
    Rect,
    Transaction,
    TxnKind,
    barrier_expected,
    depacketize,
    fork_partition,
    packetize,
    route_dimension_ordered,
    route_yx,
    source_route,
    xy_tree_edges,
)

coord_st = st.builds(Coord, st.integers(0, 3), st.integers(0, 7))


def rect_st():
    def mk(x0, y0, x1, y1):
        return Rect(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
    return st.builds(mk, st.integers(0, 3), st.integers(0, 7),
                     st.integers(0, 3), st.integers(0, 7))


@given(coord_st, coord_st)
def test_xy_routing_reaches_destination_minimally(a, b):
    cur, hops = a, 0
    while cur != b:
        cur = cur.step(route_dimension_ordered(cur, b))
        hops += 1
    assert hops == a.manhattan(b)


@given(coord_st, coord_st)
def test_yx_routing_reaches_destination_minimally(a, b):
    cur, hops = a, 0
    while cur != b:
        cur = cur.step(route_yx(cur, b))
        hops += 1
    assert hops == a.manhattan(b)


@given(coord_st, coord_st)
def test_source_route_ends_local(a, b):
    ports = source_route(a, b)
    assert ports[-1] == Direction.LOCAL
    assert len(ports) == a.manhattan(b) + 1


@given(coord_st, rect_st(), st.sampled_from(["xy", "yx"]))
def test_fork_partition_is_disjoint_cover(cur, rect, order):
    parts = fork_partition(cur, rect, order)
    seen: set = set()
    for d, sub in parts:
        sub_coords = set(sub.coords())
        assert not (seen & sub_coords)
        seen |= sub_coords
        if d == Direction.LOCAL:
            assert sub_coords == {cur}
        else:
            # Every member of the sub-rectangle is reached through port d.
            first = {
                (route_dimension_ordered if order == "xy" else route_yx)(cur, c)
                for c in sub_coords
            }
            assert first == {d}
    assert seen == set(rect.coords())


@given(rect_st())
def test_barrier_expected_sums_to_tree_edges_plus_members(rect):
    # Each member contributes one local arrival; every in-tree edge
    # delivers exactly one merged stream.
    total = sum(barrier_expected(rect, c) for c in rect.coords())
    assert total == rect.size() + (rect.size() - 1)


@given(rect_st())
def test_tree_edge_count_from_min_corner(rect):
    root = rect.min_corner()
    assert xy_tree_edges(root, rect) == rect.size() - 1


def _header(kind, length, channel=Channel.WIDE):
    return PacketHeader(
        packet_id=1, channel=channel, src="a", dst="b",
        kind=kind, txn_id=0, address=0, length=length,
    )


@given(st.binary(min_size=1, max_size=512))
def test_packetize_roundtrip_bytes(data):
    txn = Transaction(TxnKind.WRITE_REQ, 0, 0, len(data), payload=data)
    flits = packetize(txn, Channel.WIDE, 64, _header(TxnKind.WRITE_REQ, len(data)))
    assert flits[0].head and flits[-1].tail
    assert sum(f.payload_len for f in flits) == len(data)
    assert len(flits) == -(-len(data) // 64)
    back = depacketize(flits)
    assert back.payload == data and back.length == len(data)


@given(st.lists(st.integers(0, (1 << 64) - 1), min_size=1, max_size=64))
def test_packetize_roundtrip_elements(values):
    txn = Transaction(
        TxnKind.READ_RSP, 3, 0, 8 * len(values), payload=tuple(values)
    )
    flits = packetize(
        txn, Channel.WIDE, 64, _header(TxnKind.READ_RSP, 8 * len(values))
    )
    assert depacketize(flits).payload == tuple(values)


def test_zero_payload_kinds_are_single_flit():
    txn = Transaction(TxnKind.READ_REQ, 0, 0, 4096)
    flits = packetize(txn, Channel.REQ, 8, _header(TxnKind.READ_REQ, 4096,
                                                   Channel.REQ))
    assert len(flits) == 1 and flits[0].head and flits[0].tail
    assert flits[0].payload_len == 0


def test_depacketize_rejects_malformed_packets():
    txn = Transaction(TxnKind.WRITE_REQ, 0, 0, 128, payload=bytes(128))
    flits = packetize(txn, Channel.WIDE, 64, _header(TxnKind.WRITE_REQ, 128))
    with pytest.raises(ProtocolError):
        depacketize(flits[1:])  # no head
    with pytest.raises(ProtocolError):
        depacketize(flits[:-1])  # no tail
    with pytest.raises(ProtocolError):
        depacketize([])


def test_burst_limit_enforced():
    txn = Transaction(TxnKind.WRITE_REQ, 0, 0, 8192, payload=bytes(8192))
    with pytest.raises(ProtocolError):
        packetize(txn, Channel.WIDE, 64, _header(TxnKind.WRITE_REQ, 8192),
                  max_burst=4096)
