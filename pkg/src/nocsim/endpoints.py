"""Endpoints: compute clusters with multi-backend DMA engines, and memory
channels with a temporal coalescer in front of a bandwidth server.

Payload values are 64-bit unsigned integers with wraparound semantics;
memory contents follow a deterministic per-channel pattern overlaid by
explicit writes, so data integrity is checkable end to end.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    Channel,
    Flit,
    PacketHeader,
    Rect,
    Transaction,
    TxnKind,
)

U64 = np.uint64
_PATTERN_MULT = np.uint64(0x9E3779B97F4A7C15)


# --------------------------------------------------------------- stream ops


@dataclass(frozen=True)
class StreamOp:
    """An ALU operation applied in-stream to a DMA transfer.

    ``add``/``mul`` map each element; ``sum``/``min``/``max`` reduce the
    whole stream to a scalar.  All arithmetic is modulo 2**64.
    """

    kind: str  # add | mul | sum | min | max
    operand: int = 0

    REDUCTIONS = ("sum", "min", "max")

    def is_reduction(self) -> bool:
        return self.kind in self.REDUCTIONS

    def identity(self) -> int:
        if self.kind == "sum":
            return 0
        if self.kind == "min":
            return (1 << 64) - 1
        if self.kind == "max":
            return 0
        raise ValueError(f"{self.kind} is not a reduction")

    def apply_map(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "add":
            return values + U64(self.operand % (1 << 64))
        if self.kind == "mul":
            return values * U64(self.operand % (1 << 64))
        raise ValueError(f"{self.kind} is not a map")

    def accumulate(self, acc: int, values: np.ndarray) -> int:
        if self.kind == "sum":
            return int(acc + int(values.sum(dtype=U64))) % (1 << 64)
        if self.kind == "min":
            return min(acc, int(values.min()))
        if self.kind == "max":
            return max(acc, int(values.max()))
        raise ValueError(f"{self.kind} is not a reduction")


class Endpoint:
    """Anything attached to the fabric through an NI."""

    def __init__(self, endpoint_id: str):
        self.id = endpoint_id
        self.ni = None
        self.sim = None

    def tick(self, cycle: int) -> None:
        pass

    def idle(self) -> bool:
        return True

    def on_request(self, txn: Transaction, hdr: PacketHeader, cycle: int) -> None:
        pass

    def on_packed(self, hdr: PacketHeader, flits: list, cycle: int) -> None:
        raise NotImplementedError(f"{self.id} cannot take packed streams")


# ------------------------------------------------------------ cluster / DMA


@dataclass
class DmaJob:
    """One contiguous transfer, split into bursts across the DMA backends."""

    kind: str  # read | write
    target: str  # memory endpoint id
    address: int
    length: int
    op: Optional[StreamOp] = None
    on_done: Optional[Callable] = None
    channel: Channel = Channel.WIDE
    tag: str = ""
    # runtime state
    issued: int = 0
    done: int = 0
    nbursts: int = 0
    start: int = -1
    acc: int = 0
    chunks: dict = field(default_factory=dict)


@dataclass
class GatherJob:
    target: str
    addresses: list
    packed: bool
    on_done: Optional[Callable] = None
    tag: str = ""
    # runtime state
    sent: int = 0
    received: int = 0
    flits_out: int = 0
    values: dict = field(default_factory=dict)
    start: int = -1
    finish: int = -1


class ClusterEndpoint(Endpoint):
    """Compute cluster: a DMA engine with round-robin backends, in-stream
    ALU ops, and a packed-stream unit for irregular accesses."""

    def __init__(self, endpoint_id: str, cfg):
        super().__init__(endpoint_id)
        self.cfg = cfg
        self.max_burst = cfg.dma.max_burst
        self.backends = cfg.dma.backends
        self.limit = cfg.dma.backend_outstanding
        self.packed_window = cfg.dma.packed_outstanding
        self.jobs: deque = deque()
        self.active: list = []
        self.gathers: deque = deque()
        self.outstanding: dict = {b: 0 for b in range(self.backends)}
        self._probe_seq = 0
        self._barrier_open = 0

    # ------------------------------------------------------------ submit API

    def enqueue(self, job: DmaJob) -> None:
        job.nbursts = max(
            1, -(-job.length // self.max_burst)
        )
        self.jobs.append(job)

    def enqueue_gather(self, job: GatherJob) -> None:
        self.gathers.append(job)

    def probe_write(self, dst: str, cycle: int, tag: str = "probe",
                    on_response: Optional[Callable] = None) -> None:
        """Single narrow write on the request channel; its one-way delivery
        latency is the zero-load latency of the path."""
        self._probe_seq += 1
        txn = Transaction(
            TxnKind.WRITE_REQ, 1000 + self._probe_seq, 0,
            self.cfg.channels.narrow_bytes,
        )
        self.ni.submit(txn, dst, cycle, Channel.REQ, tag=tag,
                       on_response=on_response)

    def multicast_write(self, rect: Rect, length: int, cycle: int,
                        on_done: Callable, tag: str = "mcast") -> None:
        txn = Transaction(TxnKind.WRITE_REQ, 0, 0, length)
        self.ni.submit_collective(txn, rect, cycle, Channel.WIDE, on_done,
                                  tag=tag)

    def barrier(self, rect: Rect, barrier_id: tuple, cycle: int,
                on_done: Callable) -> None:
        self._barrier_open += 1

        def done(cid, c):
            self._barrier_open -= 1
            on_done(cid, c)

        self.ni.submit_barrier(rect, barrier_id, cycle, done)

    # -------------------------------------------------------------- engine

    def tick(self, cycle: int) -> None:
        if not self.active and not self.jobs and not self.gathers:
            return
        while len(self.active) < 2 and self.jobs:
            job = self.jobs.popleft()
            job.start = cycle
            self.active.append(job)
        for b in range(self.backends):
            if self.outstanding[b] >= self.limit:
                continue
            job = next((j for j in self.active if j.issued < j.nbursts), None)
            if job is None:
                break
            self._issue_burst(job, b, cycle)
        self._tick_gather(cycle)

    def _issue_burst(self, job: DmaJob, backend: int, cycle: int) -> None:
        i = job.issued
        job.issued += 1
        addr = job.address + i * self.max_burst
        length = min(self.max_burst, job.length - i * self.max_burst)
        kind = TxnKind.READ_REQ if job.kind == "read" else TxnKind.WRITE_REQ
        txn = Transaction(kind, backend, addr, length)
        self.outstanding[backend] += 1

        def on_rsp(rsp: Transaction, c: int, job=job, backend=backend, i=i):
            self.outstanding[backend] -= 1
            self._burst_done(job, rsp, i, c)

        self.ni.submit(txn, job.target, cycle, job.channel, tag=job.tag,
                       on_response=on_rsp)

    def _burst_done(self, job: DmaJob, rsp: Transaction, index: int,
                    cycle: int) -> None:
        if job.kind == "read" and rsp.payload is not None:
            values = np.asarray(rsp.payload, dtype=U64)
            if job.op is None:
                job.chunks[index] = values
            elif job.op.is_reduction():
                if job.done == 0:
                    job.acc = job.op.identity()
                job.acc = job.op.accumulate(job.acc, values)
            else:
                job.chunks[index] = job.op.apply_map(values)
        job.done += 1
        if job.done == job.nbursts:
            self.active.remove(job)
            if job.on_done is not None:
                result: object = job.acc
                if job.kind == "read" and not (job.op and job.op.is_reduction()):
                    if job.chunks:
                        result = np.concatenate(
                            [job.chunks[i] for i in sorted(job.chunks)]
                        )
                    else:
                        result = None
                job.on_done(result, cycle)

    # ------------------------------------------------------- packed streams

    def _tick_gather(self, cycle: int) -> None:
        job = self.gathers[0] if self.gathers else None
        if job is None:
            return
        if job.start < 0:
            job.start = cycle
        if job.packed:
            if job.flits_out < self.packed_window and job.sent < len(job.addresses):
                chunk = job.addresses[job.sent : job.sent + 8]
                job.sent += len(chunk)
                job.flits_out += 1
                hdr = PacketHeader(
                    packet_id=self.ni.fabric.new_packet_id(),
                    channel=Channel.WIDE,
                    src=self.id,
                    dst=job.target,
                    kind=TxnKind.READ_REQ,
                    txn_id=0,
                    address=chunk[0],
                    length=8 * len(chunk),
                    tag=job.tag,
                    packed=True,
                )
                flit = Flit(header=hdr, seq=0, head=True, tail=True,
                            payload_len=8 * len(chunk), payload=tuple(chunk))
                self.ni.submit_raw([flit], cycle)
        else:
            # Baseline: one element per wide flit in each direction.  The
            # window is only bounded by the NI id tables so the element
            # stream stays link-limited, not window-limited.
            limit = self.cfg.ni.outstanding_per_id
            for b in range(self.backends):
                if self.outstanding[b] >= limit or job.sent >= len(job.addresses):
                    break
                addr = job.addresses[job.sent]
                job.sent += 1
                txn = Transaction(TxnKind.READ_REQ, b, addr, 8)
                self.outstanding[b] += 1

                def on_rsp(rsp: Transaction, c: int, job=job, b=b):
                    self.outstanding[b] -= 1
                    job.values[rsp.address] = (
                        rsp.payload[0] if rsp.payload else None
                    )
                    job.received += 1
                    self._gather_progress(job, c)

                self.ni.submit(txn, job.target, cycle, Channel.WIDE,
                               tag=job.tag, on_response=on_rsp)

    def on_packed(self, hdr: PacketHeader, flits: list, cycle: int) -> None:
        job = self.gathers[0]
        for addr, value in flits[0].payload:
            job.values[addr] = value
            job.received += 1
        job.flits_out -= 1
        self._gather_progress(job, cycle)

    def _gather_progress(self, job: GatherJob, cycle: int) -> None:
        if job.received == len(job.addresses):
            job.finish = cycle
            self.gathers.popleft()
            if job.on_done is not None:
                job.on_done(job, cycle)

    def idle(self) -> bool:
        return (
            not self.jobs
            and not self.active
            and not self.gathers
            and self._barrier_open == 0
        )


# ----------------------------------------------------------- memory channel


@dataclass
class _Access:
    size: int  # bytes occupying the channel
    bulk: Optional[tuple] = None  # (src, txn, channel) for burst reads
    items: Optional[list] = None  # [(src, addr, txn id, packed)] granule reads


class HbmEndpoint(Endpoint):
    """One memory channel: a temporal coalescer merging narrow reads into
    granules, a FIFO bandwidth server, and a packer for packed responses."""

    def __init__(self, endpoint_id: str, cfg, seed_salt: int = 0):
        super().__init__(endpoint_id)
        self.cfg = cfg
        self.peak = cfg.hbm.peak_bytes_per_cycle
        self.access_latency = cfg.hbm.access_latency
        self.granule = cfg.hbm.granule_bytes
        self.window_capacity = cfg.hbm.coalescer_capacity
        self.age_limit = cfg.hbm.coalescer_age_limit
        self.pattern_seed = U64(
            (cfg.seed * 0x2545F4914F6CDD1D + seed_salt * 0x100000001B3)
            % (1 << 64)
        )
        self.overlay: dict = {}
        self.window: dict = {}  # granule addr -> [birth, items]
        self.queue: deque = deque()  # _Access FIFO
        self.budget = 0
        self.pack_out: dict = {}  # dst -> deque[(addr, value)]
        self._pack_rr: list = []
        self.inflight = 0
        # utilization accounting
        self.busy_bytes = 0
        self.useful_bytes = 0
        self.first_busy = -1
        self.last_busy = -1
        self.merges = 0
        self.accesses = 0

    # ---------------------------------------------------------------- values

    def value_at(self, addr: int) -> int:
        if self.overlay:
            hit = self.overlay.get(addr)
            if hit is not None:
                return hit
        return (addr * int(_PATTERN_MULT) + int(self.pattern_seed)) % (1 << 64)

    def values_range(self, addr: int, length: int) -> np.ndarray:
        idx = np.arange(addr, addr + length, 8, dtype=np.uint64)
        vals = idx * _PATTERN_MULT + self.pattern_seed
        if self.overlay:
            for i, a in enumerate(range(addr, addr + length, 8)):
                hit = self.overlay.get(a)
                if hit is not None:
                    vals[i] = hit
        return vals

    # --------------------------------------------------------------- intake

    def on_request(self, txn: Transaction, hdr: PacketHeader, cycle: int) -> None:
        if txn.kind is TxnKind.WRITE_REQ:
            if txn.payload is not None:
                data = np.asarray(txn.payload, dtype=U64)
                for i, a in enumerate(range(txn.address, txn.address + txn.length, 8)):
                    self.overlay[a] = int(data[i])
            size = max(txn.length, self.granule)
            self.queue.append(_Access(size=size))
            self.useful_bytes += txn.length
            return
        if txn.length > self.cfg.channels.narrow_bytes:
            self.queue.append(
                _Access(size=max(txn.length, self.granule),
                        bulk=(hdr.src, txn, hdr.channel))
            )
        else:
            self._coalesce(hdr.src, txn.address, txn.id, packed=False,
                           cycle=cycle)

    def on_packed(self, hdr: PacketHeader, flits: list, cycle: int) -> None:
        for addr in flits[0].payload:
            self._coalesce(hdr.src, addr, 0, packed=True, cycle=cycle)

    def _coalesce(self, src: str, addr: int, txn_id: int, packed: bool,
                  cycle: int) -> None:
        g = addr - addr % self.granule
        entry = self.window.get(g)
        if entry is not None:
            entry[1].append((src, addr, txn_id, packed))
            self.merges += 1
            return
        if len(self.window) >= self.window_capacity:
            eldest = next(iter(self.window))
            self._evict(eldest)
        self.window[g] = [cycle, [(src, addr, txn_id, packed)]]

    def _evict(self, g: int) -> None:
        _, items = self.window.pop(g)
        self.queue.append(_Access(size=self.granule, items=items))

    # --------------------------------------------------------------- service

    def tick(self, cycle: int) -> None:
        if not self.window and not self.queue and not self.pack_out:
            return
        # Age out coalescer entries (insertion order is oldest-first).
        expired = [g for g, (birth, _) in self.window.items()
                   if cycle - birth >= self.age_limit]
        for g in expired:
            self._evict(g)
        if self.queue:
            self.budget += self.peak
            while self.queue and self.queue[0].size <= self.budget:
                acc = self.queue.popleft()
                self.budget -= acc.size
                self._serve(acc, cycle)
            if not self.queue:
                self.budget = 0
        self._tick_packer(cycle)

    def _serve(self, acc: _Access, cycle: int) -> None:
        self.accesses += 1
        self.busy_bytes += acc.size
        if self.first_busy < 0:
            # The first access spent ceil(size/peak) cycles on the channel
            # ending now; start the busy window at its first cycle.
            self.first_busy = cycle - (-(-acc.size // self.peak) - 1)
        self.last_busy = cycle
        self.inflight += 1
        self.sim.schedule(cycle + self.access_latency,
                          lambda c: self._complete(acc, c))

    def _complete(self, acc: _Access, cycle: int) -> None:
        self.inflight -= 1
        if acc.bulk is not None:
            src, txn, channel = acc.bulk
            self.useful_bytes += txn.length
            payload = tuple(int(v) for v in
                            self.values_range(txn.address, txn.length))
            rsp = Transaction(TxnKind.READ_RSP, txn.id, txn.address,
                              txn.length, payload)
            self.ni.respond(rsp, src, cycle, channel)
        elif acc.items is not None:
            for src, addr, txn_id, packed in acc.items:
                self.useful_bytes += 8
                value = self.value_at(addr)
                if packed:
                    self.pack_out.setdefault(src, deque()).append((addr, value))
                else:
                    rsp = Transaction(TxnKind.READ_RSP, txn_id, addr, 8, (value,))
                    self.ni.respond(rsp, src, cycle, Channel.WIDE)

    def _tick_packer(self, cycle: int) -> None:
        """Emit at most one packed response flit per cycle, eight elements
        at a time, round-robin over requesters."""
        srcs = [s for s in self.pack_out if self.pack_out[s]]
        if not srcs:
            return
        order = sorted(srcs)
        if self._pack_rr:
            last = self._pack_rr[0]
            order = [s for s in order if s > last] + [s for s in order if s <= last]
        src = order[0]
        self._pack_rr = [src]
        q = self.pack_out[src]
        n = min(8, len(q))
        elems = tuple(q.popleft() for _ in range(n))
        hdr = PacketHeader(
            packet_id=self.ni.fabric.new_packet_id(),
            channel=Channel.WIDE,
            src=self.id,
            dst=src,
            kind=TxnKind.READ_RSP,
            txn_id=0,
            address=elems[0][0],
            length=8 * n,
            packed=True,
        )
        flit = Flit(header=hdr, seq=0, head=True, tail=True,
                    payload_len=8 * n, payload=elems)
        self.ni.submit_raw([flit], cycle)

    def idle(self) -> bool:
        return (
            not self.queue
            and not self.window
            and self.inflight == 0
            and not any(self.pack_out.values())
        )
