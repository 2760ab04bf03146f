"""Network interfaces: the protocol layer between endpoints and the fabric.

Instead of a reorder buffer, each NI keeps a small outstanding table per
transaction id and stalls a new request while the same id is still
outstanding toward a *different* destination.  Responses for one id from one
destination return in order, so no reordering storage is needed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import (
    Channel,
    CollectiveKind,
    CollectiveTag,
    Flit,
    PacketHeader,
    ProtocolError,
    Rect,
    RESPONSE_KINDS,
    Transaction,
    TxnKind,
    depacketize,
    packetize,
)
from .fabric import CHANNELS, Fabric


def id_space(kind: TxnKind) -> str:
    """Reads and writes use independent id spaces."""
    return "r" if kind in (TxnKind.READ_REQ, TxnKind.READ_RSP) else "w"


@dataclass
class _Outstanding:
    dst: object
    inject: int
    on_response: Optional[Callable] = None
    tag: str = ""


@dataclass
class _Pending:
    txn: Transaction
    dst: object
    channel: Channel
    tag: str
    collective: Optional[CollectiveTag]
    on_response: Optional[Callable]
    source_route: Optional[tuple] = None


@dataclass
class _Collective:
    inject: int
    on_done: Callable
    tag: str


class NetworkInterface:
    """One endpoint's attachment point: packetization, injection pacing,
    outstanding-id tracking, reassembly, and response generation."""

    def __init__(self, endpoint_id: str, fabric: Fabric, cfg, kernel):
        self.endpoint_id = endpoint_id
        self.fabric = fabric
        self.cfg = cfg
        self.kernel = kernel
        self.attach = fabric.attach[endpoint_id]
        self.endpoint = None  # bound by the kernel
        self.latency = cfg.latency.ni
        self.max_outstanding = cfg.ni.outstanding_per_id

        self.pending: dict = {}  # (space, id) -> deque[_Pending]
        self.outstanding: dict = {}  # (space, id) -> deque[_Outstanding]
        self.queues: dict = {ch: deque() for ch in CHANNELS}  # (ready, flit)
        self.injected_at: dict = {}  # Channel -> cycle of last injection
        self.reassembly: dict = {}  # (src, packet id, channel) -> [flits]
        self.collectives: dict = {}  # collective id -> _Collective
        self._seq = 0

    # ------------------------------------------------------------ submission

    def capacity(self, channel: Channel) -> int:
        return (
            self.cfg.channels.wide_bytes
            if channel is Channel.WIDE
            else self.cfg.channels.narrow_bytes
        )

    def submit(
        self,
        txn: Transaction,
        dst: str,
        cycle: int,
        channel: Channel,
        tag: str = "",
        on_response: Optional[Callable] = None,
        source_route: Optional[tuple] = None,
    ) -> None:
        """Queue a request; it enters the network once the outstanding-id
        rules admit it."""
        key = (id_space(txn.kind), txn.id)
        self.pending.setdefault(key, deque()).append(
            _Pending(txn, dst, channel, tag, None, on_response, source_route)
        )
        self.kernel.activate_ni(self)

    def submit_collective(
        self,
        txn: Transaction,
        rect: Rect,
        cycle: int,
        channel: Channel,
        on_done: Callable,
        tag: str = "",
    ) -> tuple:
        """Multicast write over a fork tree; completion fires once the
        single merged response returns."""
        self._seq += 1
        cid = (self.endpoint_id, self._seq)
        ctag = CollectiveTag(CollectiveKind.FORK, cid, rect)
        self.collectives[cid] = _Collective(cycle, on_done, tag)
        key = (id_space(txn.kind), txn.id)
        self.pending.setdefault(key, deque()).append(
            _Pending(txn, rect, channel, tag, ctag, None)
        )
        self.kernel.activate_ni(self)
        return cid

    def submit_barrier(
        self, rect: Rect, barrier_id: tuple, cycle: int, on_done: Callable
    ) -> None:
        """Signal arrival at a barrier over ``rect``; ``on_done`` fires when
        the release reaches this participant.  All participants must use the
        same ``barrier_id``."""
        ctag = CollectiveTag(CollectiveKind.BARRIER_ARRIVE, barrier_id, rect)
        self.collectives[barrier_id] = _Collective(cycle, on_done, "barrier")
        agg = self.fabric.cluster_at(rect.min_corner())
        txn = Transaction(TxnKind.WRITE_REQ, 0, 0, 0)
        key = ("b", barrier_id)
        self.pending.setdefault(key, deque()).append(
            _Pending(txn, agg, Channel.REQ, "barrier", ctag, None)
        )
        self.kernel.activate_ni(self)

    def submit_raw(self, flits: list, cycle: int) -> None:
        """Inject pre-formed flits (packed index/element streams) without
        transaction-layer bookkeeping."""
        for f in flits:
            f.inject_cycle = cycle
            self.queues[f.channel].append((cycle + self.latency, f))
        self.kernel.activate_ni(self)

    def respond(
        self,
        txn: Transaction,
        dst: str,
        cycle: int,
        channel: Channel,
        collective: Optional[CollectiveTag] = None,
        tag: str = "",
    ) -> None:
        """Queue a response; responses bypass the outstanding-id rules."""
        self._enqueue(txn, dst, cycle, channel, collective, tag)

    # --------------------------------------------------------------- pacing

    def drain_pending(self, cycle: int) -> None:
        """Move admissible pending requests into the injection queues."""
        for key in sorted(self.pending, key=lambda k: (k[0], repr(k[1]))):
            q = self.pending[key]
            out = self.outstanding.get(key)
            while q:
                head = q[0]
                if head.collective is None:
                    if out and len(out) >= self.max_outstanding:
                        break
                    if out and any(e.dst != head.dst for e in out):
                        break  # same id, different destination: stall
                q.popleft()
                if head.collective is None:
                    entry = _Outstanding(head.dst, cycle, head.on_response,
                                         head.tag)
                    self.outstanding.setdefault(key, deque()).append(entry)
                    out = self.outstanding[key]
                elif head.collective.kind is CollectiveKind.FORK:
                    self.collectives[head.collective.id].inject = cycle
                self._enqueue(
                    head.txn, head.dst, cycle, head.channel, head.collective,
                    head.tag, head.source_route,
                )

    def _enqueue(
        self,
        txn: Transaction,
        dst,
        cycle: int,
        channel: Channel,
        collective: Optional[CollectiveTag],
        tag: str,
        source_route: Optional[tuple] = None,
    ) -> None:
        hdr = PacketHeader(
            packet_id=self.fabric.new_packet_id(),
            channel=channel,
            src=self.endpoint_id,
            dst=dst,
            kind=txn.kind,
            txn_id=txn.id,
            address=txn.address,
            length=txn.length,
            collective=collective,
            source_route=source_route,
            tag=tag,
        )
        flits = packetize(txn, channel, self.capacity(channel), hdr,
                          max_burst=self.cfg.dma.max_burst * 8)
        ready = cycle + self.latency
        for f in flits:
            f.inject_cycle = cycle
            self.queues[channel].append((ready, f))
        self.kernel.activate_ni(self)

    def try_inject(self, cycle: int) -> int:
        """Push at most one flit per channel per cycle into the local input
        port; called repeatedly within a tick so pops downstream can free
        space we then use."""
        node, port = self.attach.node, self.attach.port
        sent = 0
        for ch in CHANNELS:
            if self.injected_at.get(ch) == cycle:
                continue
            q = self.queues[ch]
            if not q:
                continue
            ready, flit = q[0]
            if ready > cycle:
                continue
            if not node.can_accept(port, ch):
                continue
            q.popleft()
            self.injected_at[ch] = cycle
            self.fabric.metrics.flits_created += 1
            node.accept_flit(port, ch, flit, cycle, reserved=False)
            sent += 1
        return sent

    def busy(self) -> bool:
        return (
            any(self.queues[ch] for ch in CHANNELS)
            or any(self.pending.values())
            or any(self.outstanding.values())
            or bool(self.collectives)
        )

    # -------------------------------------------------------------- ejection

    def eject_flit(self, flit: Flit, cycle: int) -> None:
        hdr = flit.header
        key = (hdr.src, hdr.packet_id, hdr.channel)
        if flit.head:
            if key in self.reassembly:
                raise ProtocolError(
                    f"duplicate head for packet {hdr.packet_id} at "
                    f"{self.endpoint_id}"
                )
            self.reassembly[key] = [flit]
        else:
            try:
                self.reassembly[key].append(flit)
            except KeyError:
                raise ProtocolError(
                    f"body flit without head for packet {hdr.packet_id} at "
                    f"{self.endpoint_id}"
                ) from None
        if flit.tail:
            flits = self.reassembly.pop(key)
            self.kernel.schedule(
                cycle + self.latency, lambda c: self._deliver(flits, c)
            )

    def _deliver(self, flits: list, cycle: int) -> None:
        hdr = flits[0].header
        ctag = hdr.collective
        if ctag is not None and ctag.kind is CollectiveKind.BARRIER_RELEASE:
            entry = self.collectives.pop(ctag.id, None)
            if entry is None:
                raise ProtocolError(
                    f"barrier release at non-participant {self.endpoint_id}"
                )
            entry.on_done(ctag.id, cycle)
            return
        if hdr.packed:
            self.endpoint.on_packed(hdr, flits, cycle)
            return
        if ctag is not None and ctag.kind is CollectiveKind.JOIN:
            # Single merged response for a multicast write.
            entry = self.collectives.pop(ctag.id)
            self.fabric.metrics.packets.append(
                (entry.tag, "rtt", self.endpoint_id, str(ctag.rect),
                 hdr.channel.value, entry.inject, cycle)
            )
            entry.on_done(ctag.id, cycle)
            return
        txn = depacketize(flits)
        if hdr.kind in RESPONSE_KINDS:
            key = (id_space(hdr.kind), hdr.txn_id)
            out = self.outstanding.get(key)
            if not out:
                raise ProtocolError(
                    f"unexpected response id {hdr.txn_id} at {self.endpoint_id}"
                )
            entry = out.popleft()
            self.fabric.metrics.packets.append(
                (entry.tag, "rtt", self.endpoint_id, hdr.src,
                 hdr.channel.value, entry.inject, cycle)
            )
            if entry.on_response is not None:
                entry.on_response(txn, cycle)
            self.kernel.activate_ni(self)  # an id slot freed; retry pending
            return
        # Request delivery.
        self.fabric.metrics.packets.append(
            (hdr.tag, "oneway", hdr.src, self.endpoint_id, hdr.channel.value,
             flits[0].inject_cycle, cycle)
        )
        self.endpoint.on_request(txn, hdr, cycle)
        if hdr.kind is TxnKind.WRITE_REQ:
            rtag = None
            if ctag is not None and ctag.kind is CollectiveKind.FORK:
                rtag = CollectiveTag(CollectiveKind.JOIN, ctag.id, ctag.rect)
            self.respond(
                Transaction(TxnKind.WRITE_RSP, hdr.txn_id, hdr.address, 0),
                dst=hdr.src,
                cycle=cycle,
                channel=Channel.RSP,
                collective=rtag,
                tag=hdr.tag,
            )
