"""Switching fabric: generic five-port-style nodes, directed links, and the
fork/join collective machinery.

The same node implementation backs both mesh routers (coordinate-based
routing) and crossbar stages (table-based routing).  Each of the three
physical channels is switched independently: separate input FIFOs,
arbiter state, and wormhole locks per channel.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .core import (
    Channel,
    CollectiveKind,
    CollectiveTag,
    Coord,
    Direction,
    Flit,
    PacketHeader,
    ProtocolError,
    Rect,
    RoutingError,
    TxnKind,
    barrier_expected,
    fork_partition,
    route_dimension_ordered,
    route_yx,
)

CHANNELS = (Channel.REQ, Channel.RSP, Channel.WIDE)

# Pseudo input port for router-generated flits (merged joins, barrier
# releases); not part of the physical five ports.
GEN = "gen"


@dataclass
class Attach:
    """Where an endpoint hangs off the fabric."""

    endpoint: str
    node: "Node"
    port: object  # Direction or str
    direct: bool  # True: local NI, eject on arrival; False: via a link


@dataclass
class Link:
    """Directed link; may terminate at a node input port or at an NI."""

    name: str
    src_node: "Node"
    src_port: object
    dst: object  # ("node", node, port) or ("ni", ni)
    latency: int = 1
    serialization: dict = field(default_factory=dict)  # Channel -> cycles/flit
    count_hop: bool = True
    next_free: dict = field(default_factory=dict)  # Channel -> cycle

    def factor(self, ch: Channel) -> int:
        return self.serialization.get(ch, 1)

    def free_at(self, ch: Channel) -> int:
        return self.next_free.get(ch, 0)


@dataclass
class JoinEntry:
    expected: int
    received: int = 0
    status_ok: bool = True
    presence: int = 0  # merged source count (barriers)


@dataclass
class _FifoEntry:
    flit: Flit
    arrival: int


class Node:
    """One switching element: input FIFOs, per-output round-robin arbiters,
    wormhole locks, and a join table for in-router collectives."""

    def __init__(
        self,
        name: str,
        ports: list,
        fabric: "Fabric",
        coord: Optional[Coord] = None,
        latency: int = 1,
        fifo_depth: int = 2,
        table: Optional[dict] = None,
        join_capacity: int = 16,
    ):
        self.name = name
        self.ports = list(ports)
        self.fabric = fabric
        self.coord = coord
        self.latency = latency
        self.fifo_depth = fifo_depth
        self.table = table  # endpoint id -> out port (crossbar nodes)
        self.join_capacity = join_capacity

        self.out_links: dict = {}  # port -> Link
        self.port_depth: dict = {}  # port -> FIFO depth override
        self.in_fifos: dict = {}  # (port, Channel) -> deque[_FifoEntry]
        self.reserved: dict = {}  # (port, Channel) -> in-flight deliveries
        self.locks: dict = {}  # (out port, Channel) -> packet id
        self.lock_routes: dict = {}  # (in port, Channel) -> committed route
        self.rr: dict = {}  # (out port, Channel) -> round-robin index
        self.join_table: dict = {}  # collective id -> JoinEntry
        self._in_order = list(ports) + [GEN]

    # ------------------------------------------------------------------ admin

    def fifo(self, port, ch: Channel) -> deque:
        key = (port, ch)
        q = self.in_fifos.get(key)
        if q is None:
            q = self.in_fifos[key] = deque()
        return q

    def occupancy(self, port, ch: Channel) -> int:
        q = self.in_fifos.get((port, ch))
        return (len(q) if q else 0) + self.reserved.get((port, ch), 0)

    def can_accept(self, port, ch: Channel) -> bool:
        if port == GEN:
            return True  # internal queue, unbounded
        return self.occupancy(port, ch) < self.port_depth.get(port, self.fifo_depth)

    def reserve(self, port, ch: Channel) -> None:
        self.reserved[(port, ch)] = self.reserved.get((port, ch), 0) + 1

    def is_idle(self) -> bool:
        return (
            all(not q for q in self.in_fifos.values())
            and not any(self.reserved.values())
        )

    # --------------------------------------------------------------- delivery

    def accept_flit(self, port, ch: Channel, flit: Flit, cycle: int, reserved: bool) -> None:
        """A flit arrives on an input port (from a link or a local NI)."""
        if reserved:
            self.reserved[(port, ch)] -= 1
        if self._intercept_on_arrival(flit, cycle):
            self.fabric.metrics.flits_consumed += 1
            return
        if self._eject_on_arrival(flit, cycle):
            return
        q = self.fifo(port, ch)
        if port != GEN and (len(q) + self.reserved.get((port, ch), 0)
                            >= self.port_depth.get(port, self.fifo_depth)):
            raise AssertionError(
                f"FIFO overflow at {self.name} port {port} ch {ch.value}: "
                "backpressure bug"
            )
        q.append(_FifoEntry(flit, cycle))
        self.fabric.activate(self)

    def _eject_on_arrival(self, flit: Flit, cycle: int) -> bool:
        """Unicast flits addressed to the directly attached NI leave the
        fabric the moment they arrive (zero router delay at the
        destination; the NI ejection latency covers delivery)."""
        dst = flit.header.dst
        if isinstance(dst, Rect):
            return False
        attach = self.fabric.attach.get(dst)
        if attach is not None and attach.node is self and attach.direct:
            self.fabric.eject(attach, flit, cycle)
            return True
        return False

    def _intercept_on_arrival(self, flit: Flit, cycle: int) -> bool:
        """Barrier-arrive flits and join responses with a matching table
        entry are consumed here; a merged flit is emitted when the count
        completes."""
        tag = flit.header.collective
        if tag is None:
            return False
        if tag.kind is CollectiveKind.BARRIER_ARRIVE:
            self._barrier_update(flit, tag, cycle)
            return True
        if tag.kind is CollectiveKind.JOIN and tag.id in self.join_table:
            self._join_update(flit, tag, cycle)
            return True
        return False

    def _barrier_update(self, flit: Flit, tag: CollectiveTag, cycle: int) -> None:
        entry = self.join_table.get(tag.id)
        if entry is None:
            entry = self.join_table[tag.id] = JoinEntry(
                expected=barrier_expected(tag.rect, self.coord)
            )
        entry.received += 1
        entry.presence += max(1, flit.header.length)
        if entry.received < entry.expected:
            return
        del self.join_table[tag.id]
        agg = tag.rect.min_corner()
        if self.coord == agg:
            # Everybody arrived: fork the release back to all participants.
            release = self.fabric.make_collective_flit(
                kind=TxnKind.WRITE_REQ,
                channel=Channel.RSP,
                src=flit.header.src,
                dst=tag.rect,
                tag=CollectiveTag(CollectiveKind.BARRIER_RELEASE, tag.id, tag.rect),
                length=entry.presence,
                cycle=cycle,
            )
            self._emit(release, cycle)
        else:
            merged = self.fabric.make_collective_flit(
                kind=TxnKind.WRITE_REQ,
                channel=flit.channel,
                src=flit.header.src,
                dst=self.fabric.cluster_at(agg),
                tag=tag,
                length=entry.presence,
                cycle=cycle,
            )
            self._emit(merged, cycle)

    def _join_update(self, flit: Flit, tag: CollectiveTag, cycle: int) -> None:
        entry = self.join_table[tag.id]
        entry.received += 1
        entry.status_ok = entry.status_ok and (flit.header.length == 0)
        if entry.received < entry.expected:
            return
        del self.join_table[tag.id]
        merged = self.fabric.make_collective_flit(
            kind=TxnKind.WRITE_RSP,
            channel=Channel.RSP,
            src=flit.header.src,
            dst=flit.header.dst,  # the original collective source endpoint
            tag=tag,
            length=0 if entry.status_ok else 1,
            cycle=cycle,
        )
        self._emit(merged, cycle)

    def _emit(self, flit: Flit, cycle: int) -> None:
        """Queue a router-generated flit; if its only destination is the
        local NI it is delivered immediately."""
        self.fabric.metrics.flits_created += 1
        dst = flit.header.dst
        if isinstance(dst, Rect):
            parts = fork_partition(self.coord, dst, order="yx")
            if len(parts) == 1 and parts[0][0] is Direction.LOCAL:
                self._deliver_local(flit, cycle)
                return
        else:
            attach = self.fabric.attach.get(dst)
            if attach is not None and attach.node is self and attach.direct:
                self.fabric.eject(attach, flit, cycle)
                return
        self.fifo(GEN, flit.channel).append(_FifoEntry(flit, cycle))
        self.fabric.activate(self)

    def _deliver_local(self, flit: Flit, cycle: int) -> None:
        attach = self.fabric.attach.get(self.fabric.cluster_at(self.coord))
        if attach is None:
            raise RoutingError(f"no local endpoint at {self.name}")
        self.fabric.eject(attach, flit, cycle)

    # -------------------------------------------------------------- routing

    def route_head(self, flit: Flit) -> list:
        """Route decision for a head flit: list of (out port or EJECT-attach,
        sub-rect or None).  Multiple entries mean a fork."""
        hdr = flit.header
        dst = hdr.dst
        if isinstance(dst, Rect):
            order = "yx" if (
                hdr.collective and hdr.collective.kind is CollectiveKind.BARRIER_RELEASE
            ) else "xy"
            parts = fork_partition(self.coord, dst, order=order)
            out = []
            for d, sub in parts:
                if d is Direction.LOCAL:
                    out.append(("eject", Rect.single(self.coord)))
                else:
                    out.append((d, sub))
            return out
        attach = self.fabric.attach[dst]
        if attach.node is self:
            if attach.direct:
                return [("eject", None)]
            return [(attach.port, None)]
        if self.table is not None:
            try:
                return [(self.table[dst], None)]
            except KeyError:
                raise RoutingError(f"no route from {self.name} to {dst}") from None
        target = attach.node.coord
        if hdr.source_route is not None:
            idx = flit.__dict__.get("_sr_idx", 0)
            return [(hdr.source_route[idx], None)]
        strategy = self.fabric.routing
        if flit.channel is Channel.RSP:
            d = route_yx(self.coord, target)
        elif strategy == "table":
            d = self.fabric.route_tables[self.coord].lookup(target)
        else:
            d = route_dimension_ordered(self.coord, target)
        if d is Direction.LOCAL:
            # Target router reached but the endpoint hangs off an edge port.
            return [(attach.port, None)]
        return [(d, None)]


class FabricMetrics:
    """Raw counters filled during simulation; summarized by the metrics
    module."""

    def __init__(self) -> None:
        self.link_flits: dict = {}
        self.link_bytes: dict = {}
        self.link_busy: dict = {}
        self.link_traces: dict = {}  # link name -> list of (ch, pkt, head, tail)
        self.energy_pj: float = 0.0
        self.flits_created: int = 0
        self.flits_ejected: int = 0
        self.flits_consumed: int = 0
        self.packets: list = []  # (tag, src, dst, channel, inject, deliver, hops)
        self.trace_links: bool = False


class Fabric:
    """The interconnect graph plus everything needed to step it one cycle."""

    def __init__(self, routing: str = "xy", energy_per_byte_hop: float = 0.15):
        self.nodes: dict[str, Node] = {}
        self.links: list[Link] = []
        self.attach: dict[str, Attach] = {}
        self.coord_nodes: dict[Coord, Node] = {}
        self.route_tables: dict = {}
        self.routing = routing
        self.energy_per_byte_hop = energy_per_byte_hop
        self.metrics = FabricMetrics()
        self.active: dict[str, Node] = {}  # insertion-ordered set
        self._deliveries: dict[int, list] = {}
        self._eject_fn: Optional[Callable] = None
        self._gen_packet_id = 1 << 40  # router-generated packets
        self._packet_id = 0

    def new_packet_id(self) -> int:
        self._packet_id += 1
        return self._packet_id

    # ------------------------------------------------------------- building

    def add_node(self, node: Node) -> Node:
        self.nodes[node.name] = node
        if node.coord is not None:
            self.coord_nodes[node.coord] = node
        return node

    def connect(
        self,
        src: Node,
        src_port,
        dst: Node,
        dst_port,
        latency: int = 1,
        serialization: Optional[dict] = None,
        count_hop: bool = True,
    ) -> Link:
        link = Link(
            name=f"{src.name}:{src_port}->{dst.name}",
            src_node=src,
            src_port=src_port,
            dst=("node", dst, dst_port),
            latency=latency,
            serialization=serialization or {},
            count_hop=count_hop,
        )
        src.out_links[src_port] = link
        self.links.append(link)
        return link

    def connect_ni(
        self, src: Node, src_port, endpoint: str, latency: int = 1, count_hop: bool = True
    ) -> Link:
        link = Link(
            name=f"{src.name}:{src_port}->{endpoint}",
            src_node=src,
            src_port=src_port,
            dst=("ni", endpoint),
            latency=latency,
            count_hop=count_hop,
        )
        src.out_links[src_port] = link
        self.links.append(link)
        return link

    def attach_endpoint(self, endpoint: str, node: Node, port, direct: bool) -> None:
        self.attach[endpoint] = Attach(endpoint, node, port, direct)

    def cluster_at(self, coord: Coord) -> str:
        return f"cluster{coord}"

    # ------------------------------------------------------------- stepping

    def set_eject_handler(self, fn: Callable) -> None:
        self._eject_fn = fn

    def activate(self, node: Node) -> None:
        self.active.setdefault(node.name, node)

    def eject(self, attach: Attach, flit: Flit, cycle: int) -> None:
        self.metrics.flits_ejected += 1
        self._eject_fn(attach.endpoint, flit, cycle)

    def make_collective_flit(
        self,
        kind: TxnKind,
        channel: Channel,
        src: str,
        dst,
        tag: CollectiveTag,
        length: int,
        cycle: int,
    ) -> Flit:
        self._gen_packet_id += 1
        hdr = PacketHeader(
            packet_id=self._gen_packet_id,
            channel=channel,
            src=src,
            dst=dst,
            kind=kind,
            txn_id=0,
            address=0,
            length=length,
            collective=tag,
        )
        return Flit(header=hdr, seq=0, head=True, tail=True, payload_len=0,
                    inject_cycle=cycle)

    def deliver_due(self, cycle: int) -> None:
        due = self._deliveries.pop(cycle, None)
        if not due:
            return
        for link, flit in due:
            kind = link.dst[0]
            if kind == "node":
                _, node, port = link.dst
                node.accept_flit(port, flit.channel, flit, cycle, reserved=True)
            else:
                _, endpoint = link.dst
                self.metrics.flits_ejected += 1
                self._eject_fn(endpoint, flit, cycle)

    def in_flight(self) -> bool:
        return bool(self._deliveries) or any(
            not n.is_idle() for n in self.active.values()
        )

    def stuck_report(self) -> list[str]:
        out = []
        for name in sorted(self.nodes):
            node = self.nodes[name]
            for (port, ch), q in sorted(
                node.in_fifos.items(), key=lambda kv: (str(kv[0][0]), kv[0][1].value)
            ):
                for entry in q:
                    out.append(
                        f"packet {entry.flit.packet_id} ({entry.flit.header.kind.value}) "
                        f"stuck at {name} port {port} ch {ch.value}"
                    )
        for cycle in sorted(self._deliveries):
            for link, flit in self._deliveries[cycle]:
                out.append(f"packet {flit.packet_id} in flight on {link.name}")
        return out

    # The arbitration core.  Called repeatedly within one tick until no
    # progress is made; this models combinational ready/valid flow control,
    # which is what lets depth-2 FIFOs sustain full throughput.
    def arbitrate_round(self, cycle: int) -> int:
        grants = 0
        for name in sorted(self.active):
            node = self.active[name]
            grants += self._arbitrate_node(node, cycle)
        return grants

    def _arbitrate_node(self, node: Node, cycle: int) -> int:
        grants = 0
        # Gather eligible head flits per (inport, channel).
        candidates: dict = {}  # (out port, ch) -> list of (in port, entry, route)
        eligible: dict = {}
        for port in node._in_order:
            for ch in CHANNELS:
                q = node.in_fifos.get((port, ch))
                if not q:
                    continue
                entry = q[0]
                if getattr(entry, "_popped_at", -1) == cycle:
                    continue
                wait = 0 if port == GEN else node.latency
                if cycle < entry.arrival + wait:
                    continue
                flit = entry.flit
                if flit.head:
                    try:
                        route = node.route_head(flit)
                    except RoutingError:
                        raise
                else:
                    route = node.lock_routes.get((port, ch))
                    if route is None:
                        raise ProtocolError(
                            f"body flit without head route at {node.name}"
                        )
                eligible[(port, ch)] = (entry, route)
                for out, _sub in route:
                    candidates.setdefault((out, ch), []).append(port)

        if not eligible:
            return 0

        granted_out: set = set()
        popped_in: set = set()
        for (out, ch), ports in sorted(
            candidates.items(), key=lambda kv: (str(kv[0][0]), kv[0][1].value)
        ):
            if out == "eject":
                continue  # handled as part of the owning input's grant
            if (out, ch) in granted_out:
                continue
            order = self._rr_order(node, out, ch, ports)
            for port in order:
                if (port, ch) in popped_in:
                    continue
                entry, route = eligible[(port, ch)]
                if self._try_commit(node, port, ch, entry, route, cycle,
                                    granted_out, popped_in):
                    node.rr[(out, ch)] = self._port_index(node, port) + 1
                    grants += 1
                    break
        # Inputs whose entire route is local ejection never appear as
        # output candidates; grant them directly.
        for (port, ch), (entry, route) in eligible.items():
            if (port, ch) in popped_in:
                continue
            if all(out == "eject" for out, _ in route):
                if self._try_commit(node, port, ch, entry, route, cycle,
                                    granted_out, popped_in):
                    grants += 1
        return grants

    def _port_index(self, node: Node, port) -> int:
        try:
            return node._in_order.index(port)
        except ValueError:
            return len(node._in_order)

    def _rr_order(self, node: Node, out, ch: Channel, ports: list) -> list:
        start = node.rr.get((out, ch), 0)
        idx = sorted(set(self._port_index(node, p) for p in ports))
        rotated = [i for i in idx if i >= start] + [i for i in idx if i < start]
        return [node._in_order[i] for i in rotated]

    def _try_commit(
        self,
        node: Node,
        port,
        ch: Channel,
        entry: _FifoEntry,
        route: list,
        cycle: int,
        granted_out: set,
        popped_in: set,
    ) -> bool:
        flit = entry.flit
        # Check every output of the route (all-or-nothing for forks).
        for out, _sub in route:
            if out == "eject":
                continue
            if (out, ch) in granted_out:
                return False
            lock = node.locks.get((out, ch))
            if lock is not None and lock != flit.packet_id:
                return False
            link = node.out_links.get(out)
            if link is None:
                raise RoutingError(f"{node.name} has no link on port {out}")
            if link.free_at(ch) > cycle:
                return False
            if link.dst[0] == "node":
                _, dnode, dport = link.dst
                if not dnode.can_accept(dport, ch):
                    return False
        # Fork with a pending join: need table space at this node.
        tag = flit.header.collective
        is_fork = (
            flit.head
            and tag is not None
            and tag.kind is CollectiveKind.FORK
            and len(route) > 1
        )
        if is_fork and tag.id not in node.join_table:
            if len(node.join_table) >= node.join_capacity:
                return False  # fork stalls until an entry frees up

        # Commit.
        q = node.in_fifos[(port, ch)]
        q.popleft()
        entry._popped_at = cycle  # type: ignore[attr-defined]
        popped_in.add((port, ch))
        if flit.head and not flit.tail:
            node.lock_routes[(port, ch)] = route
        if flit.tail:
            node.lock_routes.pop((port, ch), None)
        if is_fork:
            node.join_table[tag.id] = JoinEntry(expected=len(route))

        replicas = len(route)
        if flit.head and replicas > 1:
            self.metrics.flits_created += replicas - 1
        for out, sub in route:
            out_flit = flit
            if replicas > 1 or (flit.head and sub is not None and
                                isinstance(flit.header.dst, Rect)):
                out_flit = self._replica(flit, sub)
            if out == "eject":
                self._eject_replica(node, out_flit, cycle)
                continue
            granted_out.add((out, ch))
            if flit.head and not flit.tail:
                node.locks[(out, ch)] = flit.packet_id
            if flit.tail:
                node.locks.pop((out, ch), None)
            if flit.header.source_route is not None:
                out_flit.__dict__["_sr_idx"] = flit.__dict__.get("_sr_idx", 0) + 1
            self._send(node, out, ch, out_flit, cycle)
        return True

    def _replica(self, flit: Flit, sub) -> Flit:
        hdr = flit.header
        new_hdr = PacketHeader(
            packet_id=hdr.packet_id,
            channel=hdr.channel,
            src=hdr.src,
            dst=sub if sub is not None else hdr.dst,
            kind=hdr.kind,
            txn_id=hdr.txn_id,
            address=hdr.address,
            length=hdr.length,
            collective=hdr.collective,
            source_route=hdr.source_route,
            tag=hdr.tag,
            packed=hdr.packed,
        )
        return Flit(
            header=new_hdr,
            seq=flit.seq,
            head=flit.head,
            tail=flit.tail,
            payload_len=flit.payload_len,
            payload=flit.payload,
            inject_cycle=flit.inject_cycle,
        )

    def _eject_replica(self, node: Node, flit: Flit, cycle: int) -> None:
        attach = self.attach.get(self.cluster_at(node.coord))
        if attach is None:
            raise RoutingError(f"no local endpoint at {node.name} for fork replica")
        self.eject(attach, flit, cycle)

    def _send(self, node: Node, out, ch: Channel, flit: Flit, cycle: int) -> None:
        link = node.out_links[out]
        link.next_free[ch] = cycle + link.factor(ch)
        if link.dst[0] == "node":
            _, dnode, dport = link.dst
            dnode.reserve(dport, ch)
            self.activate(dnode)
        arrival = cycle + link.latency
        self._deliveries.setdefault(arrival, []).append((link, flit))
        m = self.metrics
        key = (link.name, ch.value)
        m.link_flits[key] = m.link_flits.get(key, 0) + 1
        m.link_bytes[key] = m.link_bytes.get(key, 0) + flit.payload_len
        m.link_busy[key] = m.link_busy.get(key, 0) + link.factor(ch)
        if m.trace_links:
            m.link_traces.setdefault(link.name, []).append(
                (ch.value, flit.packet_id, flit.head, flit.tail)
            )
        if link.count_hop:
            m.energy_pj += flit.payload_len * self.energy_per_byte_hop

    def sweep_idle(self) -> None:
        for name in [n for n, node in self.active.items() if node.is_idle()]:
            del self.active[name]


MESH_PORTS = [
    Direction.NORTH,
    Direction.EAST,
    Direction.SOUTH,
    Direction.WEST,
    Direction.LOCAL,
]


def build_mesh(cfg) -> Fabric:
    """Build a cols x rows 2D mesh per chiplet; multiple chiplets stack
    vertically into one virtual mesh whose seam links model the die-to-die
    interface (extra latency, serialized wide flits).

    Endpoints: one compute cluster per router on the local port, one memory
    channel per row hanging off the west edge.
    """
    fabric = Fabric(
        routing=cfg.router.routing,
        energy_per_byte_hop=cfg.energy.pj_per_byte_hop,
    )
    cols = cfg.mesh.cols
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    for y in range(rows):
        for x in range(cols):
            c = Coord(x, y)
            fabric.add_node(
                Node(
                    name=f"r{c}",
                    ports=MESH_PORTS,
                    fabric=fabric,
                    coord=c,
                    latency=cfg.latency.router,
                    fifo_depth=cfg.router.fifo_depth,
                    join_capacity=cfg.router.join_table_capacity,
                )
            )
    d2d_ser = {ch: cfg.d2d.serialization for ch in CHANNELS}
    for y in range(rows):
        for x in range(cols):
            node = fabric.coord_nodes[Coord(x, y)]
            for d in (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST):
                nx, ny = x + d.delta()[0], y + d.delta()[1]
                if not (0 <= nx < cols and 0 <= ny < rows):
                    continue
                peer = fabric.coord_nodes[Coord(nx, ny)]
                crossing = (
                    d in (Direction.NORTH, Direction.SOUTH)
                    and (min(y, ny) + 1) % cfg.mesh.rows == 0
                    and min(y, ny) + 1 < rows
                )
                if crossing:
                    seam_latency = cfg.latency.link + cfg.d2d.crossing_latency
                    fabric.connect(
                        node, d, peer, d.opposite(),
                        latency=seam_latency,
                        serialization=dict(d2d_ser),
                    )
                    # The die-to-die receiver buffers a full crossing worth
                    # of flits so flow control does not throttle the seam.
                    peer.port_depth[d.opposite()] = (
                        seam_latency + cfg.router.fifo_depth
                    )
                else:
                    fabric.connect(node, d, peer, d.opposite(),
                                   latency=cfg.latency.link)
            # Compute cluster on the local port (direct NI).
            fabric.attach_endpoint(
                fabric.cluster_at(Coord(x, y)), node, Direction.LOCAL, direct=True
            )
    # Memory channels: one per row on the west edge, reached over a real
    # link (the edge hop counts for latency and energy).
    for y in range(rows):
        node = fabric.coord_nodes[Coord(0, y)]
        hbm = f"hbm{y}"
        fabric.connect_ni(node, Direction.WEST, hbm, latency=cfg.latency.link)
        fabric.attach_endpoint(hbm, node, Direction.WEST, direct=False)
    return fabric
