"""Cycle-stepped simulation kernel.

One tick: deliver link flits due this cycle, fire scheduled events, tick
endpoints, admit pending NI requests, then run arbitration rounds to a
fixpoint (ready/valid flow control resolves combinationally within a
cycle).  All iteration orders are fixed, so runs are bit-reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np

from .fabric import Fabric
from .netif import NetworkInterface


class SimTimeout(Exception):
    """Raised when traffic fails to drain before the cycle limit."""


class Simulator:
    def __init__(self, cfg, fabric: Fabric):
        self.cfg = cfg
        self.fabric = fabric
        self.metrics = fabric.metrics
        self.cycle = 0
        self.endpoints: dict = {}
        self.nis: dict = {}
        self._wheel: dict = {}
        self._active_nis: dict = {}
        fabric.set_eject_handler(self._eject)

    # ----------------------------------------------------------------- setup

    def add_endpoint(self, endpoint) -> None:
        ni = NetworkInterface(endpoint.id, self.fabric, self.cfg, self)
        ni.endpoint = endpoint
        endpoint.ni = ni
        endpoint.sim = self
        self.endpoints[endpoint.id] = endpoint
        self.nis[endpoint.id] = ni

    def rng(self, name: str) -> np.random.Generator:
        """Independent deterministic stream per named component."""
        key = (self.cfg.seed << 32) ^ zlib.crc32(name.encode())
        return np.random.Generator(np.random.Philox(key=key))

    # -------------------------------------------------------------- plumbing

    def schedule(self, cycle: int, fn) -> None:
        if cycle < self.cycle:
            raise ValueError(f"cannot schedule into the past ({cycle})")
        self._wheel.setdefault(cycle, []).append(fn)

    def activate_ni(self, ni: NetworkInterface) -> None:
        self._active_nis.setdefault(ni.endpoint_id, ni)

    def _eject(self, endpoint_id: str, flit, cycle: int) -> None:
        self.nis[endpoint_id].eject_flit(flit, cycle)

    # ------------------------------------------------------------------ run

    def _idle(self) -> bool:
        if self._wheel or self.fabric._deliveries:
            return False
        if any(ni.busy() for ni in self._active_nis.values()):
            return False
        if any(not n.is_idle() for n in self.fabric.active.values()):
            return False
        return all(ep.idle() for ep in self.endpoints.values())

    def run(self, max_cycles: int = 0) -> int:
        """Advance until all traffic drains; returns the final cycle."""
        limit = max_cycles or self.cfg.max_cycles
        c = self.cycle
        ordered = [self.endpoints[k] for k in sorted(self.endpoints)]
        while not self._idle():
            if c >= limit:
                report = "; ".join(self._stuck_report()[:20]) or "no packets queued"
                raise SimTimeout(
                    f"no drain after {c} cycles: {report}"
                )
            self.cycle = c
            self.fabric.deliver_due(c)
            while True:
                fns = self._wheel.pop(c, None)
                if not fns:
                    break
                for fn in fns:
                    fn(c)
            for ep in ordered:
                ep.tick(c)
            active = sorted(self._active_nis)
            for eid in active:
                self._active_nis[eid].drain_pending(c)
            while True:
                grants = self.fabric.arbitrate_round(c)
                for eid in active:
                    grants += self._active_nis[eid].try_inject(c)
                if grants == 0:
                    break
            self.fabric.sweep_idle()
            for eid in [e for e, ni in self._active_nis.items() if not ni.busy()]:
                del self._active_nis[eid]
            c += 1
        self.cycle = c
        return c

    def _stuck_report(self) -> list:
        out = self.fabric.stuck_report()
        for eid in sorted(self._active_nis):
            ni = self._active_nis[eid]
            for key, q in sorted(ni.pending.items(), key=lambda kv: repr(kv[0])):
                if q:
                    out.append(f"{len(q)} pending requests id {key} at NI {eid}")
            for ch, q in ni.queues.items():
                if q:
                    out.append(f"{len(q)} flits queued on {ch.value} at NI {eid}")
        return out
