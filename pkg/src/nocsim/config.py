"""Simulation configuration: defaults, validation, and config-file parsing.

Config files are INI-style key/value text with sections, e.g.::

    [mesh]
    cols = 4
    rows = 8

    [energy]
    pj_per_byte_hop = 0.15

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields


class ConfigError(Exception):
    pass


def _power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass
class MeshConfig:
    cols: int = 4
    rows: int = 8
    chiplets: int = 1  # chiplets stacked along y, joined by D2D links


@dataclass
class ChannelConfig:
    wide_bytes: int = 64
    narrow_bytes: int = 8


@dataclass
class LatencyConfig:
    router: int = 1
    link: int = 1
    ni: int = 2


@dataclass
class HbmConfig:
    peak_bytes_per_cycle: int = 64
    access_latency: int = 40
    granule_bytes: int = 32
    coalescer_capacity: int = 16
    coalescer_age_limit: int = 8


@dataclass
class D2dConfig:
    serialization: int = 2  # per-channel factor; wide throughput = width / factor
    crossing_latency: int = 15


@dataclass
class XbarConfig:
    groups: int = 6
    clusters_per_group: int = 4
    hbm_channels: int = 8
    stage_latency: int = 2


@dataclass
class RouterConfig:
    fifo_depth: int = 2
    join_table_capacity: int = 16
    routing: str = "xy"  # xy | table | source


@dataclass
class NiConfig:
    outstanding_per_id: int = 16


@dataclass
class DmaConfig:
    backends: int = 4
    max_burst: int = 512
    backend_outstanding: int = 3
    packed_outstanding: int = 64
    pipeline_fill: int = 4  # in-stream unit fill latency, cycles


@dataclass
class EnergyConfig:
    pj_per_byte_hop: float = 0.15


@dataclass
class SimConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    channels: ChannelConfig = field(default_factory=ChannelConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    hbm: HbmConfig = field(default_factory=HbmConfig)
    d2d: D2dConfig = field(default_factory=D2dConfig)
    xbar: XbarConfig = field(default_factory=XbarConfig)
    router: RouterConfig = field(default_factory=RouterConfig)
    ni: NiConfig = field(default_factory=NiConfig)
    dma: DmaConfig = field(default_factory=DmaConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    seed: int = 42
    max_cycles: int = 2_000_000

    def validate(self) -> "SimConfig":
        m = self.mesh
        if m.cols < 1 or m.rows < 1:
            raise ConfigError(f"mesh.cols/mesh.rows must be >= 1, got {m.cols}x{m.rows}")
        if m.chiplets < 1:
            raise ConfigError("mesh.chiplets must be >= 1")
        for name in ("router", "link", "ni"):
            v = getattr(self.latency, name)
            if v < 1:
                raise ConfigError(f"latency.{name} must be >= 1, got {v}")
        for name in ("wide_bytes", "narrow_bytes"):
            v = getattr(self.channels, name)
            if not _power_of_two(v):
                raise ConfigError(f"channels.{name} must be a power of two, got {v}")
        if self.hbm.peak_bytes_per_cycle < 1 or self.hbm.access_latency < 1:
            raise ConfigError("hbm.peak_bytes_per_cycle and hbm.access_latency must be >= 1")
        if not _power_of_two(self.hbm.granule_bytes):
            raise ConfigError("hbm.granule_bytes must be a power of two")
        if self.d2d.serialization < 1 or self.d2d.crossing_latency < 0:
            raise ConfigError("invalid d2d parameters")
        if self.router.fifo_depth < 1:
            raise ConfigError("router.fifo_depth must be >= 1")
        if self.router.routing not in ("xy", "table", "source"):
            raise ConfigError(f"unknown routing strategy {self.router.routing!r}")
        if self.dma.backends < 1 or self.dma.max_burst < 8:
            raise ConfigError("invalid dma parameters")
        if self.max_cycles < 1:
            raise ConfigError("max_cycles must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        return self


_SECTIONS = {
    "mesh": MeshConfig,
    "channels": ChannelConfig,
    "latency": LatencyConfig,
    "hbm": HbmConfig,
    "d2d": D2dConfig,
    "xbar": XbarConfig,
    "router": RouterConfig,
    "ni": NiConfig,
    "dma": DmaConfig,
    "energy": EnergyConfig,
}

_TOP_KEYS = {"seed": int, "max_cycles": int}


def parse_config_text(text: str, origin: str = "<config>") -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc

    cfg = SimConfig()
    for section in parser.sections():
        if section == "sim":
            for key, raw in parser.items(section):
                if key not in _TOP_KEYS:
                    raise ConfigError(f"{origin}: unknown key sim.{key}")
                try:
                    setattr(cfg, key, _TOP_KEYS[key](raw))
                except ValueError:
                    raise ConfigError(f"{origin}: sim.{key}: not an integer: {raw!r}") from None
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        sub = getattr(cfg, section)
        valid = {f.name: f.type for f in fields(sub)}
        for key, raw in parser.items(section):
            if key not in valid:
                raise ConfigError(f"{origin}: unknown key {section}.{key}")
            cur = getattr(sub, key)
            try:
                if isinstance(cur, bool):
                    value: object = parser.getboolean(section, key)
                elif isinstance(cur, int):
                    value = int(raw)
                elif isinstance(cur, float):
                    value = float(raw)
                else:
                    value = raw
            except ValueError:
                raise ConfigError(
                    f"{origin}: {section}.{key}: cannot parse {raw!r}"
                ) from None
            setattr(sub, key, value)
    return cfg.validate()


def parse_config(path: str) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), origin=path)
