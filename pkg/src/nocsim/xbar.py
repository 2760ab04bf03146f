"""Hierarchical-crossbar baseline topology.

Clusters sit on per-group crossbars; each group owns one full-width port
pair to a system-level crossbar that fans out to the memory channels.
Responses for different groups share each memory-side input FIFO, so
wormhole bursts suffer head-of-line blocking that the mesh avoids with its
per-row channels -- that contrast is the point of the baseline.
"""

from __future__ import annotations

from .fabric import Fabric, Node


def build_xbar(cfg, nclusters: int = 0) -> Fabric:
    """Build the hierarchy for ``nclusters`` endpoints (default: the
    configured groups x clusters-per-group), assigned to groups round-robin
    so oversubscribed configurations spread evenly."""
    fabric = Fabric(routing="table",
                    energy_per_byte_hop=cfg.energy.pj_per_byte_hop)
    groups = cfg.xbar.groups
    channels = cfg.xbar.hbm_channels
    if not nclusters:
        nclusters = groups * cfg.xbar.clusters_per_group
    group_of = {i: i % groups for i in range(nclusters)}

    clusters = [f"cluster{i}" for i in range(nclusters)]
    hbms = [f"hbm{h}" for h in range(channels)]

    # System-level crossbar: one port per group, one per memory channel.
    sys_ports = [f"g{g}" for g in range(groups)] + [f"h{h}" for h in range(channels)]
    sys_table = {}
    for i in range(nclusters):
        sys_table[clusters[i]] = f"g{group_of[i]}"
    for h in range(channels):
        sys_table[hbms[h]] = f"h{h}"
    sx = fabric.add_node(
        Node(
            name="sx",
            ports=sys_ports,
            fabric=fabric,
            latency=cfg.xbar.stage_latency,
            fifo_depth=cfg.router.fifo_depth,
            table=sys_table,
        )
    )

    for g in range(groups):
        members = [i for i in range(nclusters) if group_of[i] == g]
        ports = [f"c{k}" for k in range(len(members))] + ["up"]
        table = {}
        for i in range(nclusters):
            table[clusters[i]] = (f"c{members.index(i)}" if i in members
                                  else "up")
        for h in range(channels):
            table[hbms[h]] = "up"
        gx = fabric.add_node(
            Node(
                name=f"gx{g}",
                ports=ports,
                fabric=fabric,
                latency=cfg.xbar.stage_latency,
                fifo_depth=cfg.router.fifo_depth,
                table=table,
            )
        )
        fabric.connect(gx, "up", sx, f"g{g}", latency=cfg.latency.link)
        fabric.connect(sx, f"g{g}", gx, "up", latency=cfg.latency.link)
        for k, i in enumerate(members):
            fabric.attach_endpoint(clusters[i], gx, f"c{k}", direct=True)

    for h in range(channels):
        fabric.connect_ni(sx, f"h{h}", hbms[h], latency=cfg.latency.link)
        fabric.attach_endpoint(hbms[h], sx, f"h{h}", direct=False)
    return fabric
