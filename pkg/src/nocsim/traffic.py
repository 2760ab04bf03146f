"""Traffic generation: deterministic load patterns and probe schedules
driving the scenario presets."""

from __future__ import annotations

from .core import Coord, Rect, TxnKind, Transaction, Channel
from .endpoints import ClusterEndpoint, DmaJob, GatherJob, StreamOp


def row_channel(coord: Coord, rows: int) -> str:
    """Mesh clusters use the memory channel of their own row."""
    return f"hbm{coord.y}"


def load_all_clusters(sim, length: int, tag: str = "load") -> None:
    """Every cluster reads ``length`` bytes from its row's memory channel;
    the steady state saturates all channels simultaneously."""
    cfg = sim.cfg
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    for y in range(rows):
        for x in range(cfg.mesh.cols):
            c = Coord(x, y)
            ep = sim.endpoints[sim.fabric.cluster_at(c)]
            ep.enqueue(DmaJob("read", row_channel(c, rows), 0, length, tag=tag))


def load_xbar_clusters(sim, length: int, channels: int,
                       tag: str = "load") -> None:
    """Crossbar counterpart: cluster ``i`` reads from channel ``i % n``."""
    i = 0
    while f"cluster{i}" in sim.endpoints:
        ep = sim.endpoints[f"cluster{i}"]
        ep.enqueue(DmaJob("read", f"hbm{i % channels}", 0, length, tag=tag))
        i += 1


def schedule_probes(sim, pairs: list, gap: int, tag: str = "probe") -> None:
    """Fire one single-flit probe write per pair, ``gap`` cycles apart, so
    every probe sees an otherwise idle fabric."""
    for i, (src, dst) in enumerate(pairs):
        ep = sim.endpoints[src]
        sim.schedule(i * gap, lambda c, ep=ep, dst=dst: ep.probe_write(dst, c, tag=tag))


def all_pairs(sim) -> list:
    """All ordered cluster pairs of a mesh."""
    cfg = sim.cfg
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    names = [
        sim.fabric.cluster_at(Coord(x, y))
        for y in range(rows)
        for x in range(cfg.mesh.cols)
    ]
    return [(a, b) for a in names for b in names if a != b]


def background_wide_writes(sim, rng, count: int, length: int,
                           tag: str = "bg") -> None:
    """Random cluster-to-cluster wide write bursts used to saturate the
    wide channel while probes measure the narrow channels."""
    cfg = sim.cfg
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    coords = [Coord(x, y) for y in range(rows) for x in range(cfg.mesh.cols)]
    n = len(coords)
    for _ in range(count):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        src = sim.endpoints[sim.fabric.cluster_at(coords[i])]
        dst = sim.fabric.cluster_at(coords[j])
        src.enqueue(DmaJob("write", dst, 0, length, tag=tag))
