"""Scenario presets: canned experiments with built-in property checks.

Each scenario builds its own simulator(s), runs to drain, and returns a
Report whose rows feed the CSV/JSON exporters and whose checks drive the
CLI exit status.
"""

from __future__ import annotations

import copy
import zlib

import numpy as np

from .core import Channel, Coord, Rect, Transaction, TxnKind
from .endpoints import ClusterEndpoint, DmaJob, GatherJob, HbmEndpoint, StreamOp
from .fabric import build_mesh
from .kernel import Simulator
from .metrics import Report, channel_flits, latency_rows
from .traffic import (
    all_pairs,
    load_all_clusters,
    load_xbar_clusters,
    schedule_probes,
)
from .xbar import build_xbar

KIB = 1024


# ------------------------------------------------------------------ builders


def build_mesh_sim(cfg) -> Simulator:
    fabric = build_mesh(cfg)
    sim = Simulator(cfg, fabric)
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    for y in range(rows):
        for x in range(cfg.mesh.cols):
            sim.add_endpoint(
                ClusterEndpoint(fabric.cluster_at(Coord(x, y)), cfg)
            )
        sim.add_endpoint(HbmEndpoint(f"hbm{y}", cfg, seed_salt=y))
    return sim


def build_xbar_sim(cfg, nclusters: int = 0) -> Simulator:
    if not nclusters:
        nclusters = cfg.xbar.groups * cfg.xbar.clusters_per_group
    fabric = build_xbar(cfg, nclusters)
    sim = Simulator(cfg, fabric)
    for i in range(nclusters):
        sim.add_endpoint(ClusterEndpoint(f"cluster{i}", cfg))
    for h in range(cfg.xbar.hbm_channels):
        sim.add_endpoint(HbmEndpoint(f"hbm{h}", cfg, seed_salt=h))
    return sim


def _scenario_rng(cfg, name: str) -> np.random.Generator:
    key = (cfg.seed << 32) ^ zlib.crc32(name.encode())
    return np.random.Generator(np.random.Philox(key=key))


def zero_load_latency(cfg, hops: int, crossings: int = 0) -> int:
    return (
        2 * cfg.latency.ni
        + hops * (cfg.latency.router + cfg.latency.link)
        + crossings * cfg.d2d.crossing_latency
    )


def _track_jobs(sim, tag: str = "load") -> dict:
    """Wrap every queued DMA job so completion spans can be read back."""
    spans: dict = {}
    for eid in sorted(sim.endpoints):
        ep = sim.endpoints[eid]
        if not isinstance(ep, ClusterEndpoint):
            continue
        for job in ep.jobs:
            def done(_result, c, eid=eid, job=job):
                spans[eid] = (job.start, c)

            job.on_done = done
    return spans


def _hbm_aggregate(report: Report, sim) -> dict:
    """Busy-window utilization per memory channel."""
    aggs = {}
    for eid in sorted(sim.endpoints):
        ep = sim.endpoints[eid]
        if not isinstance(ep, HbmEndpoint) or ep.first_busy < 0:
            continue
        window = ep.last_busy - ep.first_busy + 1
        util = ep.useful_bytes / (window * ep.peak)
        aggs[eid] = util
        report.add("utilization", eid, "channel_util", util)
        report.add("utilization", eid, "useful_bytes", ep.useful_bytes)
        report.add("utilization", eid, "coalescer_merges", ep.merges)
    return aggs


def _common_rows(report: Report, sim, cycles: int) -> None:
    total_bytes = sum(
        ep.useful_bytes for ep in sim.endpoints.values()
        if isinstance(ep, HbmEndpoint)
    )
    report.add("performance", report.scenario, "cycles", cycles)
    report.add("performance", report.scenario, "total_bytes", total_bytes)
    if cycles:
        report.add("performance", report.scenario, "bytes_per_cycle",
                   total_bytes / cycles)
    report.add("energy", report.scenario, "total_pj", sim.metrics.energy_pj)
    if total_bytes:
        report.add("energy", report.scenario, "pj_per_byte",
                   sim.metrics.energy_pj / total_bytes)


# ----------------------------------------------------------------- scenarios


def scenario_hbm_zero(cfg) -> Report:
    """One cluster streams from its row's memory channel on an otherwise
    idle fabric; delivery should be gapless."""
    report = Report("hbm-zero")
    sim = build_mesh_sim(cfg)
    length = 64 * KIB
    src = Coord(3, 4)
    ep = sim.endpoints[sim.fabric.cluster_at(src)]
    ep.enqueue(DmaJob("read", "hbm4", 0, length, tag="load"))
    spans = _track_jobs(sim)
    cycles = sim.run()

    delivered = sorted(
        deliver for t, d, *_rest, deliver in
        [(r[0], r[1], r[5], r[6]) for r in sim.metrics.packets]
        if t == "load" and d == "rtt"
    )
    nbursts = len(delivered)
    window = delivered[-1] - delivered[0] if nbursts > 1 else 1
    sustained = (length - cfg.dma.max_burst) / (window * cfg.channels.wide_bytes)
    report.add("utilization", str(src), "sustained_link_util", sustained)
    _hbm_aggregate(report, sim)
    latency_rows(report, sim.metrics, "load", "burst_read", direction="rtt")
    _common_rows(report, sim, cycles)
    report.check("sustained_utilization_ge_95pct", sustained >= 0.95,
                 f"{sustained:.4f}")
    return report


def _full_load_mesh(cfg, length: int, report: Report) -> tuple:
    sim = build_mesh_sim(cfg)
    load_all_clusters(sim, length)
    spans = _track_jobs(sim)
    cycles = sim.run()
    peak = cfg.channels.wide_bytes
    utils = {}
    for eid in sorted(spans):
        start, finish = spans[eid]
        utils[eid] = length / ((finish - start) * peak)
        report.add("utilization", eid, "cluster_util", utils[eid])
    return sim, cycles, utils


def scenario_hbm_full(cfg) -> Report:
    """All clusters stream from their row channels at once: each channel is
    shared four ways, so every cluster sustains a quarter of its peak."""
    report = Report("hbm-full")
    length = 64 * KIB
    sim, cycles, utils = _full_load_mesh(cfg, length, report)
    aggs = _hbm_aggregate(report, sim)
    latency_rows(report, sim.metrics, "load", "burst_read", direction="rtt")
    _common_rows(report, sim, cycles)

    vals = list(utils.values())
    report.check(
        "per_cluster_util_25pct_pm_1",
        all(0.24 <= v <= 0.26 for v in vals),
        f"min={min(vals):.4f} max={max(vals):.4f}",
    )
    report.check(
        "aggregate_channel_util_ge_95pct",
        all(v >= 0.95 for v in aggs.values()),
        f"min={min(aggs.values()):.4f}",
    )
    return report


def scenario_xbar_vs_mesh(cfg) -> Report:
    """Same full load on the mesh and on a hierarchical crossbar hosting an
    equal cluster count; compares mean per-cluster utilization."""
    report = Report("xbar-vs-mesh")
    length = 32 * KIB
    _sim, _cycles, mesh_utils = _full_load_mesh(cfg, length, report)

    # Same cluster population on the crossbar: the mesh exposes one edge
    # link per memory channel, while the hierarchy funnels everything
    # through its shared group ports (the min-cut of the topology).
    nclusters = cfg.mesh.cols * cfg.mesh.rows * cfg.mesh.chiplets
    xsim = build_xbar_sim(cfg, nclusters)
    load_xbar_clusters(xsim, length, cfg.xbar.hbm_channels)
    spans = _track_jobs(xsim)
    xcycles = xsim.run()
    peak = cfg.channels.wide_bytes
    xbar_utils = {}
    for eid in sorted(spans):
        start, finish = spans[eid]
        xbar_utils[eid] = length / ((finish - start) * peak)
        report.add("utilization", f"xbar_{eid}", "cluster_util",
                   xbar_utils[eid])

    mesh_mean = sum(mesh_utils.values()) / len(mesh_utils)
    xbar_mean = sum(xbar_utils.values()) / len(xbar_utils)
    report.add("performance", "mesh", "mean_cluster_util", mesh_mean)
    report.add("performance", "xbar", "mean_cluster_util", xbar_mean)
    report.add("performance", "mesh_vs_xbar", "relative_gain",
               mesh_mean / xbar_mean - 1.0)
    report.add("performance", "xbar", "cycles", xcycles)
    report.add("energy", "xbar", "total_pj", xsim.metrics.energy_pj)
    report.check(
        "mesh_util_ge_10pct_over_xbar",
        mesh_mean >= 1.10 * xbar_mean,
        f"mesh={mesh_mean:.4f} xbar={xbar_mean:.4f}",
    )
    return report


def scenario_latency_sweep(cfg) -> Report:
    """One probe per ordered cluster pair on an idle mesh; every latency
    must match the zero-load formula exactly."""
    report = Report("latency-sweep")
    sim = build_mesh_sim(cfg)
    pairs = all_pairs(sim)
    schedule_probes(sim, pairs, gap=64)
    cycles = sim.run()

    coords = {}
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    for y in range(rows):
        for x in range(cfg.mesh.cols):
            coords[sim.fabric.cluster_at(Coord(x, y))] = Coord(x, y)

    mismatches = 0
    by_hops: dict = {}
    for t, d, src, dst, _ch, inject, deliver in sim.metrics.packets:
        if t != "probe" or d != "oneway":
            continue
        hops = coords[src].manhattan(coords[dst])
        expect = zero_load_latency(cfg, hops)
        if deliver - inject != expect:
            mismatches += 1
        by_hops.setdefault(hops, []).append(deliver - inject)
    for hops in sorted(by_hops):
        vals = by_hops[hops]
        report.add("latency", f"hops{hops}", "mean_cycles",
                   sum(vals) / len(vals))
        report.add("latency", f"hops{hops}", "count", len(vals))
    _common_rows(report, sim, cycles)
    total = sum(len(v) for v in by_hops.values())
    report.check("all_pairs_match_zero_load_formula",
                 mismatches == 0 and total == len(pairs),
                 f"{total - mismatches}/{len(pairs)}")
    return report


def scenario_broadcast(cfg) -> Report:
    """A fork-tree multicast write against the equivalent unicast series:
    tree edges versus summed path lengths, in traversals and in energy."""
    report = Report("broadcast")
    rect = Rect(0, 0, 3, 1)
    src = Coord(0, 0)
    length = cfg.channels.wide_bytes

    msim = build_mesh_sim(cfg)
    ep = msim.endpoints[msim.fabric.cluster_at(src)]
    done = []
    msim.schedule(0, lambda c: ep.multicast_write(
        rect, length, c, lambda cid, cc: done.append(cc)))
    msim.run()
    mcast_flits = channel_flits(msim.metrics, "wide")
    mcast_energy = msim.metrics.energy_pj

    usim = build_mesh_sim(cfg)
    uep = usim.endpoints[usim.fabric.cluster_at(src)]

    def fire(c):
        for i, member in enumerate(rect.coords()):
            txn = Transaction(TxnKind.WRITE_REQ, 10 + i, 0, length)
            uep.ni.submit(txn, usim.fabric.cluster_at(member), c,
                          Channel.WIDE, tag="uni")

    usim.schedule(0, fire)
    usim.run()
    uni_flits = channel_flits(usim.metrics, "wide")
    uni_energy = usim.metrics.energy_pj

    tree_edges = rect.size() - 1
    path_sum = sum(src.manhattan(m) for m in rect.coords())
    report.add("performance", "multicast", "wide_link_traversals", mcast_flits)
    report.add("performance", "unicast", "wide_link_traversals", uni_flits)
    report.add("energy", "multicast", "total_pj", mcast_energy)
    report.add("energy", "unicast", "total_pj", uni_energy)
    report.add("energy", "multicast_vs_unicast", "ratio",
               mcast_energy / uni_energy)
    latency_rows(report, msim.metrics, "mcast", "multicast", direction="rtt")
    report.check("multicast_traversals_equal_tree_edges",
                 mcast_flits == tree_edges, f"{mcast_flits} vs {tree_edges}")
    report.check("unicast_traversals_equal_path_sum",
                 uni_flits == path_sum, f"{uni_flits} vs {path_sum}")
    report.check(
        "energy_ratio_equals_edge_ratio",
        abs(mcast_energy / uni_energy - tree_edges / path_sum) < 1e-9,
        f"{mcast_energy / uni_energy:.6f}",
    )
    report.check("multicast_completed", len(done) == 1, str(done))
    return report


def scenario_barrier(cfg) -> Report:
    """Random rectangles of clusters synchronize; the arrive tree must
    carry exactly one merged request per edge, and the release exactly one
    flit per edge of its fork tree."""
    report = Report("barrier")
    rng = _scenario_rng(cfg, "barrier-rects")
    rows = cfg.mesh.rows * cfg.mesh.chiplets
    trials = 100
    exact = 0
    released_ok = 0
    for i in range(trials):
        xs = sorted(int(v) for v in rng.integers(0, cfg.mesh.cols, 2))
        ys = sorted(int(v) for v in rng.integers(0, rows, 2))
        rect = Rect(xs[0], ys[0], xs[1], ys[1])
        sim = build_mesh_sim(cfg)
        released = []
        for member in rect.coords():
            ep = sim.endpoints[sim.fabric.cluster_at(member)]
            sim.schedule(0, lambda c, ep=ep: ep.barrier(
                rect, ("bar", i), c, lambda cid, cc: released.append(cc)))
        sim.run()
        req = channel_flits(sim.metrics, "req")
        rsp = channel_flits(sim.metrics, "rsp")
        edges = rect.size() - 1
        if req == edges and rsp == edges:
            exact += 1
        if len(released) == rect.size():
            released_ok += 1
        if i == 0:
            report.add("latency", "barrier0", "release_cycle",
                       max(released) if released else -1)
            report.add("performance", "barrier0", "participants", rect.size())
            report.add("performance", "barrier0", "req_traversals", req)
            report.add("energy", "barrier0", "total_pj",
                       sim.metrics.energy_pj)
    report.add("performance", "barriers", "trials", trials)
    report.add("performance", "barriers", "exact_edge_counts", exact)
    report.check("one_request_per_tree_edge", exact == trials,
                 f"{exact}/{trials}")
    report.check("all_participants_released", released_ok == trials,
                 f"{released_ok}/{trials}")
    return report


def scenario_instream_reduce(cfg) -> Report:
    """DMA reads with in-stream ALU ops; results must equal a software
    fold/map over the same memory contents."""
    report = Report("instream-reduce")
    sim = build_mesh_sim(cfg)
    hbm = sim.endpoints["hbm2"]
    ep = sim.endpoints[sim.fabric.cluster_at(Coord(1, 2))]
    cases = [
        ("add", StreamOp("add", 7), 4 * KIB),
        ("mul", StreamOp("mul", 0x10001), 8 * KIB),
        ("sum", StreamOp("sum"), 16 * KIB),
        ("min", StreamOp("min"), 32 * KIB),
        ("max", StreamOp("max"), 2 * KIB),
    ]
    results: dict = {}
    base = 0
    layout = []
    for name, op, length in cases:
        layout.append((name, op, base, length))
        ep.enqueue(DmaJob(
            "read", "hbm2", base, length, op=op, tag="op",
            on_done=lambda r, c, name=name: results.__setitem__(name, r),
        ))
        base += length
    cycles = sim.run()

    ok = True
    for name, op, addr, length in layout:
        ref = hbm.values_range(addr, length)
        if op.is_reduction():
            expect = op.identity()
            expect = op.accumulate(expect, ref)
            match = results[name] == expect
        else:
            expect = op.apply_map(ref)
            match = bool(np.array_equal(results[name], expect))
        ok = ok and match
        report.add("performance", name, "match", 1 if match else 0)
    latency_rows(report, sim.metrics, "op", "op_read", direction="rtt")
    _common_rows(report, sim, cycles)
    report.check("instream_ops_match_oracle", ok, f"{len(cases)} cases")
    return report


def _run_gather(cfg, addresses: list, packed: bool, tag: str) -> tuple:
    sim = build_mesh_sim(cfg)
    ep = sim.endpoints[sim.fabric.cluster_at(Coord(1, 2))]
    job = GatherJob("hbm2", addresses, packed, tag=tag)
    ep.enqueue_gather(job)
    sim.run()
    hbm = sim.endpoints["hbm2"]
    sample = addresses[:: max(1, len(addresses) // 64)]
    values_ok = all(job.values[a] == hbm.value_at(a) for a in sample)
    return job.finish - job.start, values_ok


def scenario_scatter_gather(cfg) -> Report:
    """Irregular gathers: packed index streams with memory-side coalescing
    against the one-element-per-flit baseline."""
    report = Report("scatter-gather")
    gcfg = copy.deepcopy(cfg)
    gcfg.hbm.peak_bytes_per_cycle = 2 * cfg.channels.wide_bytes
    n = 64 * KIB
    rng = _scenario_rng(cfg, "gather-indices")
    region_elems = 512  # 4 KiB of hot data
    random_addrs = [int(v) * 8 for v in rng.integers(0, region_elems, n)]
    seq_addrs = [i * 8 for i in range(n)]

    t_up_rand, ok1 = _run_gather(gcfg, random_addrs, packed=False, tag="up")
    t_p_rand, ok2 = _run_gather(gcfg, random_addrs, packed=True, tag="pk")
    t_up_seq, ok3 = _run_gather(gcfg, seq_addrs, packed=False, tag="up")
    t_p_seq, ok4 = _run_gather(gcfg, seq_addrs, packed=True, tag="pk")

    ratio_rand = t_up_rand / t_p_rand
    ratio_seq = t_up_seq / t_p_seq
    report.add("performance", "random", "unpacked_cycles", t_up_rand)
    report.add("performance", "random", "packed_cycles", t_p_rand)
    report.add("performance", "random", "speedup", ratio_rand)
    report.add("performance", "contiguous", "unpacked_cycles", t_up_seq)
    report.add("performance", "contiguous", "packed_cycles", t_p_seq)
    report.add("performance", "contiguous", "speedup", ratio_seq)
    report.check("random_speedup_in_4_to_8", 4.0 <= ratio_rand <= 8.0,
                 f"{ratio_rand:.3f}")
    report.check("contiguous_speedup_ge_7_6", ratio_seq >= 7.6,
                 f"{ratio_seq:.3f}")
    report.check("gather_values_match_memory", ok1 and ok2 and ok3 and ok4)
    return report


def scenario_d2d_cross(cfg) -> Report:
    """Two stacked chiplets: crossing latency adds exactly once per seam
    traversal, and seam throughput is the wide width over the
    serialization factor."""
    report = Report("d2d-cross")
    dcfg = copy.deepcopy(cfg)
    dcfg.mesh.chiplets = 2
    sim = build_mesh_sim(dcfg)
    rows = dcfg.mesh.rows
    pairs = []
    for (sx, sy), (dx, dy) in [
        ((1, 2), (1, 12)), ((0, 7), (0, 8)), ((3, 0), (2, 15)),
        ((2, 10), (2, 3)), ((1, 5), (3, 5)),
    ]:
        pairs.append((sim.fabric.cluster_at(Coord(sx, sy)),
                      sim.fabric.cluster_at(Coord(dx, dy))))
    schedule_probes(sim, pairs, gap=100)

    src = sim.endpoints[sim.fabric.cluster_at(Coord(0, 6))]
    length = 32 * KIB
    sim.schedule(600, lambda c: src.enqueue(DmaJob(
        "write", sim.fabric.cluster_at(Coord(0, 9)), 0, length, tag="d2d")))
    cycles = sim.run()

    coords = {}
    for y in range(2 * rows):
        for x in range(dcfg.mesh.cols):
            coords[sim.fabric.cluster_at(Coord(x, y))] = Coord(x, y)
    mismatch = 0
    probes = 0
    for t, d, s, dst, _ch, inject, deliver in sim.metrics.packets:
        if t != "probe" or d != "oneway":
            continue
        probes += 1
        a, b = coords[s], coords[dst]
        crossings = 1 if (a.y < rows) != (b.y < rows) else 0
        expect = zero_load_latency(dcfg, a.manhattan(b), crossings)
        if deliver - inject != expect:
            mismatch += 1
        report.add("latency", f"{s}->{dst}", "cycles", deliver - inject)

    arrivals = sorted(
        deliver for t, d, *_r, deliver in
        [(r[0], r[1], r[5], r[6]) for r in sim.metrics.packets]
        if t == "d2d" and d == "oneway"
    )
    burst = dcfg.dma.max_burst
    span = arrivals[-1] - arrivals[0]
    throughput = (length - burst) / span
    expect_tp = dcfg.channels.wide_bytes / dcfg.d2d.serialization
    report.add("performance", "seam", "bytes_per_cycle", throughput)
    report.add("performance", "seam", "expected_bytes_per_cycle", expect_tp)
    _common_rows(report, sim, cycles)
    report.check("cross_latency_adds_crossing_exactly",
                 mismatch == 0 and probes == len(pairs),
                 f"{probes - mismatch}/{len(pairs)}")
    report.check("seam_throughput_equals_width_over_serialization",
                 abs(throughput - expect_tp) < 1e-9, f"{throughput:.3f}")
    return report


SCENARIOS = {
    "hbm-zero": scenario_hbm_zero,
    "hbm-full": scenario_hbm_full,
    "latency-sweep": scenario_latency_sweep,
    "xbar-vs-mesh": scenario_xbar_vs_mesh,
    "broadcast": scenario_broadcast,
    "barrier": scenario_barrier,
    "scatter-gather": scenario_scatter_gather,
    "instream-reduce": scenario_instream_reduce,
    "d2d-cross": scenario_d2d_cross,
}


def run_scenario(name: str, cfg) -> Report:
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise ValueError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}"
        ) from None
    return fn(cfg)
