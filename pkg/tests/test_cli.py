"""Command-line entry point tests (fast presets only)."""

import subprocess
import sys


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "nocsim.cli", *args],
        capture_output=True, text=True,
    )


def test_scenario_writes_csv_and_json(tmp_path):
    out = tmp_path / "results"
    res = run_cli("--scenario", "broadcast", "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert (out / "broadcast.csv").exists()
    assert (out / "broadcast.json").exists()
    assert "PASS" in res.stdout and "FAIL" not in res.stdout


def test_csv_only_flag(tmp_path):
    out = tmp_path / "results"
    res = run_cli("--scenario", "broadcast", "--out", str(out), "--csv")
    assert res.returncode == 0, res.stderr
    assert (out / "broadcast.csv").exists()
    assert not (out / "broadcast.json").exists()


def test_unknown_scenario_is_usage_error():
    res = run_cli("--scenario", "nope")
    assert res.returncode == 2


def test_bad_config_file_is_config_error(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[mesh]\ncols = 0\n")
    res = run_cli("--scenario", "broadcast", "--config", str(bad))
    assert res.returncode == 2


def test_seed_override_changes_nothing_structural(tmp_path):
    a = run_cli("--scenario", "broadcast", "--out", str(tmp_path / "a"),
                "--seed", "1")
    b = run_cli("--scenario", "broadcast", "--out", str(tmp_path / "b"),
                "--seed", "1")
    assert a.returncode == b.returncode == 0
    assert ((tmp_path / "a" / "broadcast.csv").read_bytes()
            == (tmp_path / "b" / "broadcast.csv").read_bytes())
