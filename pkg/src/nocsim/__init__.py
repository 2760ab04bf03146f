"""Cycle-stepped simulator for chiplet-scale interconnects.

Models a 2D-mesh NoC with three physical channels (req/rsp/wide),
a hierarchical-crossbar baseline, DMA endpoints, HBM channel servers,
die-to-die links, and in-network data-movement extensions
(fork/join collectives, in-stream DMA ops, packed irregular streams).
"""

__version__ = "0.1.0"
