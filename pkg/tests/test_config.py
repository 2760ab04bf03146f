"""Config parsing and validation tests."""

import pytest

from nocsim.config import ConfigError, SimConfig, parse_config, parse_config_text


def test_defaults_validate():
    cfg = SimConfig().validate()
    assert cfg.mesh.cols == 4 and cfg.mesh.rows == 8
    assert cfg.channels.wide_bytes == 64 and cfg.channels.narrow_bytes == 8
    assert cfg.energy.pj_per_byte_hop == 0.15


def test_parse_overrides_sections_and_sim_keys():
    cfg = parse_config_text(
        """
        [sim]
        seed = 7
        max_cycles = 1000

        [mesh]
        chiplets = 2

        [energy]
        pj_per_byte_hop = 0.1455
        """
    )
    assert cfg.seed == 7 and cfg.max_cycles == 1000
    assert cfg.mesh.chiplets == 2
    assert cfg.energy.pj_per_byte_hop == 0.1455


@pytest.mark.parametrize(
    "text",
    [
        "[mesh]\ncols = 0\n",
        "[channels]\nwide_bytes = 48\n",
        "[router]\nrouting = zigzag\n",
        "[nosuch]\nkey = 1\n",
        "[mesh]\nnosuch = 1\n",
        "[mesh]\ncols = four\n",
        "[sim]\nnosuch = 1\n",
        "[d2d]\nserialization = 0\n",
    ],
)
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_parse_config_file(tmp_path):
    p = tmp_path / "sim.ini"
    p.write_text("[hbm]\npeak_bytes_per_cycle = 128\n")
    assert parse_config(str(p)).hbm.peak_bytes_per_cycle == 128
