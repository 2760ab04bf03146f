"""Core interconnect vocabulary: coordinates, channels, flits, transactions,
packetization, and the static routing functions shared by routers and
crossbar nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterator, Optional, Union


class Direction(IntEnum):
    """Mesh router port directions (Local = attached NI)."""

    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3
    LOCAL = 4

    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    def delta(self) -> tuple[int, int]:
        return _DELTA[self]


_OPPOSITE = {
    Direction.NORTH: Direction.SOUTH,
    Direction.SOUTH: Direction.NORTH,
    Direction.EAST: Direction.WEST,
    Direction.WEST: Direction.EAST,
    Direction.LOCAL: Direction.LOCAL,
}

_DELTA = {
    Direction.NORTH: (0, 1),
    Direction.SOUTH: (0, -1),
    Direction.EAST: (1, 0),
    Direction.WEST: (-1, 0),
    Direction.LOCAL: (0, 0),
}


class Channel(Enum):
    """The three independent physical channels of one link."""

    REQ = "req"
    RSP = "rsp"
    WIDE = "wide"


class RoutingError(Exception):
    pass


class ProtocolError(Exception):
    pass


@dataclass(frozen=True, order=True)
class Coord:
    x: int
    y: int

    def manhattan(self, other: "Coord") -> int:
        return abs(self.x - other.x) + abs(self.y - other.y)

    def step(self, d: Direction) -> "Coord":
        dx, dy = d.delta()
        return Coord(self.x + dx, self.y + dy)

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


@dataclass(frozen=True, order=True)
class Rect:
    """Inclusive axis-aligned rectangle of mesh coordinates.

    Multicast destination sets are restricted to rectangles so they
    compose exactly with dimension-ordered fork trees.
    """

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"degenerate rectangle {self}")

    @classmethod
    def single(cls, c: Coord) -> "Rect":
        return cls(c.x, c.y, c.x, c.y)

    def contains(self, c: Coord) -> bool:
        return self.x0 <= c.x <= self.x1 and self.y0 <= c.y <= self.y1

    def size(self) -> int:
        return (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)

    def coords(self) -> Iterator[Coord]:
        for y in range(self.y0, self.y1 + 1):
            for x in range(self.x0, self.x1 + 1):
                yield Coord(x, y)

    def min_corner(self) -> Coord:
        return Coord(self.x0, self.y0)

    def __str__(self) -> str:
        return f"[{self.x0}..{self.x1}]x[{self.y0}..{self.y1}]"


class TxnKind(Enum):
    READ_REQ = "read_req"
    WRITE_REQ = "write_req"
    READ_RSP = "read_rsp"
    WRITE_RSP = "write_rsp"


REQUEST_KINDS = (TxnKind.READ_REQ, TxnKind.WRITE_REQ)
RESPONSE_KINDS = (TxnKind.READ_RSP, TxnKind.WRITE_RSP)

# Kinds whose flits carry payload bytes.
PAYLOAD_KINDS = (TxnKind.WRITE_REQ, TxnKind.READ_RSP)


@dataclass
class Transaction:
    """Memory read/write burst exchanged between endpoints through NIs."""

    kind: TxnKind
    id: int
    address: int
    length: int
    payload: Optional[object] = None  # bytes, tuple of uint64, or None

    def is_request(self) -> bool:
        return self.kind in REQUEST_KINDS

    def has_payload(self) -> bool:
        return self.kind in PAYLOAD_KINDS


class CollectiveKind(Enum):
    FORK = "fork"  # replicated request travelling a fork tree
    JOIN = "join"  # response merging back along the tree
    BARRIER_ARRIVE = "barrier_arrive"
    BARRIER_RELEASE = "barrier_release"


@dataclass(frozen=True)
class CollectiveTag:
    kind: CollectiveKind
    id: tuple  # (source endpoint, sequence number); unique per collective
    rect: Rect


@dataclass
class PacketHeader:
    """Out-of-band metadata shared by all flits of one packet."""

    packet_id: int
    channel: Channel
    src: str  # endpoint id
    dst: Union[str, Rect]  # endpoint id, or multicast rectangle
    kind: TxnKind
    txn_id: int
    address: int
    length: int
    collective: Optional[CollectiveTag] = None
    source_route: Optional[tuple] = None  # precomputed port list, if used
    tag: str = ""  # free-form traffic class label for metrics grouping
    packed: bool = False  # carries packed index/element vectors in-band


@dataclass
class Flit:
    """Atomic unit moved on one physical channel per link per cycle.

    Header metadata travels out-of-band; ``payload_len`` is the number of
    in-band payload bytes, which is what bandwidth and energy accounting
    charge.
    """

    header: PacketHeader
    seq: int
    head: bool
    tail: bool
    payload_len: int
    payload: Optional[object] = None
    inject_cycle: int = -1

    @property
    def channel(self) -> Channel:
        return self.header.channel

    @property
    def packet_id(self) -> int:
        return self.header.packet_id


def route_dimension_ordered(cur: Coord, dst: Coord) -> Direction:
    """X-first dimension-ordered routing; total on in-bounds coords."""
    if cur.x < dst.x:
        return Direction.EAST
    if cur.x > dst.x:
        return Direction.WEST
    if cur.y < dst.y:
        return Direction.NORTH
    if cur.y > dst.y:
        return Direction.SOUTH
    return Direction.LOCAL


def route_yx(cur: Coord, dst: Coord) -> Direction:
    """Y-first routing; the exact reverse of an X-first path."""
    if cur.y < dst.y:
        return Direction.NORTH
    if cur.y > dst.y:
        return Direction.SOUTH
    if cur.x < dst.x:
        return Direction.EAST
    if cur.x > dst.x:
        return Direction.WEST
    return Direction.LOCAL


class RouteTable:
    """Static per-node routing table: destination coord -> port."""

    def __init__(self, node: Coord, entries: dict[Coord, Direction]):
        self.node = node
        self.entries = dict(entries)

    def lookup(self, dst: Coord) -> Direction:
        try:
            return self.entries[dst]
        except KeyError:
            raise RoutingError(f"no route from {self.node} to {dst}") from None

    @classmethod
    def from_xy(cls, node: Coord, cols: int, rows: int) -> "RouteTable":
        entries = {}
        for y in range(rows):
            for x in range(cols):
                dst = Coord(x, y)
                entries[dst] = route_dimension_ordered(node, dst)
        return cls(node, entries)


def route_table(node: Coord, table: RouteTable, dst: Coord) -> Direction:
    return table.lookup(dst)


def source_route(src: Coord, dst: Coord) -> tuple[Direction, ...]:
    """Precomputed X-first port list carried in the header."""
    ports = []
    cur = src
    while cur != dst:
        d = route_dimension_ordered(cur, dst)
        ports.append(d)
        cur = cur.step(d)
    ports.append(Direction.LOCAL)
    return tuple(ports)


def fork_partition(
    cur: Coord, rect: Rect, order: str = "xy"
) -> list[tuple[Direction, Rect]]:
    """Partition a multicast rectangle by routing direction from ``cur``.

    ``order="xy"`` matches X-first request routing; ``order="yx"`` matches
    the Y-first path responses and barrier releases take.  The returned
    sub-rectangles are disjoint and their union is ``rect``.
    """
    if rect.size() < 1:
        raise ValueError("empty multicast set")
    out: list[tuple[Direction, Rect]] = []
    if order == "xy":
        if rect.x0 < cur.x:
            out.append((Direction.WEST, Rect(rect.x0, rect.y0, min(rect.x1, cur.x - 1), rect.y1)))
        if rect.x1 > cur.x:
            out.append((Direction.EAST, Rect(max(rect.x0, cur.x + 1), rect.y0, rect.x1, rect.y1)))
        if rect.x0 <= cur.x <= rect.x1:
            if rect.y0 < cur.y:
                out.append((Direction.SOUTH, Rect(cur.x, rect.y0, cur.x, min(rect.y1, cur.y - 1))))
            if rect.y1 > cur.y:
                out.append((Direction.NORTH, Rect(cur.x, max(rect.y0, cur.y + 1), cur.x, rect.y1)))
            if rect.y0 <= cur.y <= rect.y1:
                out.append((Direction.LOCAL, Rect.single(cur)))
    elif order == "yx":
        if rect.y0 < cur.y:
            out.append((Direction.SOUTH, Rect(rect.x0, rect.y0, rect.x1, min(rect.y1, cur.y - 1))))
        if rect.y1 > cur.y:
            out.append((Direction.NORTH, Rect(rect.x0, max(rect.y0, cur.y + 1), rect.x1, rect.y1)))
        if rect.y0 <= cur.y <= rect.y1:
            if rect.x0 < cur.x:
                out.append((Direction.WEST, Rect(rect.x0, cur.y, min(rect.x1, cur.x - 1), cur.y)))
            if rect.x1 > cur.x:
                out.append((Direction.EAST, Rect(max(rect.x0, cur.x + 1), cur.y, rect.x1, cur.y)))
            if rect.x0 <= cur.x <= rect.x1:
                out.append((Direction.LOCAL, Rect.single(cur)))
    else:
        raise ValueError(f"unknown fork order {order!r}")
    # Sort for a deterministic replica order.
    out.sort(key=lambda t: t[0])
    return out


def xy_tree_edges(root: Coord, rect: Rect) -> int:
    """Number of link traversals of an X-first fork tree from ``root``.

    Equals the edge count of the union of X-first paths root -> member.
    """
    edges = set()
    for dst in rect.coords():
        cur = root
        while cur != dst:
            d = route_dimension_ordered(cur, dst)
            nxt = cur.step(d)
            edges.add((cur, nxt))
            cur = nxt
    return len(edges)


def barrier_expected(rect: Rect, cur: Coord) -> int:
    """Expected arrival count for a barrier join at ``cur``.

    The aggregation node is the rectangle's minimum corner; participant
    requests route X-first toward it, merging at every router of the
    resulting in-tree.  Arrivals at ``cur``: its own local request, one
    merged stream from the east (rest of its row), and, on the western
    column only, one merged stream from the north.
    """
    if not rect.contains(cur):
        raise ValueError(f"{cur} outside barrier rectangle {rect}")
    exp = 1
    if cur.x < rect.x1:
        exp += 1
    if cur.x == rect.x0 and cur.y < rect.y1:
        exp += 1
    return exp


def packetize(
    t: Transaction,
    channel: Channel,
    capacity: int,
    header: PacketHeader,
    max_burst: int = 4096,
) -> list[Flit]:
    """Serialize a transaction into flits on one channel.

    ``capacity`` is the channel payload width in bytes.  Zero-payload
    kinds produce a single head+tail flit.
    """
    if t.length > max_burst:
        raise ProtocolError(
            f"burst of {t.length} B exceeds configured maximum of {max_burst} B"
        )
    payload_bytes = t.length if t.has_payload() else 0
    nflits = max(1, math.ceil(payload_bytes / capacity))
    flits = []
    for i in range(nflits):
        chunk = min(capacity, payload_bytes - i * capacity) if payload_bytes else 0
        chunk_payload = None
        if t.payload is not None and payload_bytes:
            per = max(1, capacity // 8)
            if isinstance(t.payload, (bytes, bytearray)):
                chunk_payload = bytes(t.payload[i * capacity : i * capacity + chunk])
            else:  # tuple of 64-bit elements
                chunk_payload = tuple(t.payload[i * per : (i + 1) * per])
        flits.append(
            Flit(
                header=header,
                seq=i,
                head=(i == 0),
                tail=(i == nflits - 1),
                payload_len=max(chunk, 0),
                payload=chunk_payload,
            )
        )
    return flits


def depacketize(flits: list[Flit]) -> Transaction:
    """Reassemble one complete in-order packet into its transaction."""
    if not flits:
        raise ProtocolError("empty flit sequence")
    if not flits[0].head:
        raise ProtocolError("packet does not start with a head flit")
    if sum(1 for f in flits if f.head) != 1:
        raise ProtocolError("multiple head flits in one packet")
    if not flits[-1].tail or sum(1 for f in flits if f.tail) != 1:
        raise ProtocolError("missing or duplicated tail flit")
    hdr = flits[0].header
    if any(f.header.packet_id != hdr.packet_id for f in flits):
        raise ProtocolError("interleaved packet ids in reassembly")
    payload: Optional[object] = None
    if any(f.payload is not None for f in flits):
        parts = [f.payload for f in flits if f.payload is not None]
        if isinstance(parts[0], (bytes, bytearray)):
            payload = b"".join(parts)  # type: ignore[arg-type]
        else:
            payload = tuple(x for p in parts for x in p)  # type: ignore[union-attr]
    return Transaction(
        kind=hdr.kind, id=hdr.txn_id, address=hdr.address, length=hdr.length,
        payload=payload,
    )
