"""Report formatting and output-file tests."""

import json

from nocsim.metrics import Report, fmt_value


def make_report():
    r = Report("demo")
    r.add("latency", "a->b", "cycles", 20)
    r.add("utilization", "hbm0", "channel_util", 0.25)
    r.check("always_true", True, "ok")
    r.check("always_false", False, "boom")
    return r


def test_csv_schema_and_values():
    lines = make_report().to_csv().splitlines()
    assert lines[0] == "kind,entity,metric,value"
    assert "latency,a->b,cycles,20" in lines
    assert "utilization,hbm0,channel_util,0.25" in lines
    assert "check,demo,always_true,1" in lines
    assert "check,demo,always_false,0" in lines


def test_json_tree_and_pass_flag():
    doc = json.loads(make_report().to_json())
    assert doc["scenario"] == "demo"
    assert doc["results"]["latency"]["a->b"]["cycles"] == 20
    assert doc["passed"] is False


def test_float_formatting_roundtrips():
    assert float(fmt_value(0.1 + 0.2)) == 0.1 + 0.2
    assert fmt_value(True) == "1"
    assert fmt_value(7) == "7"


def test_write_outputs_both_formats(tmp_path):
    r = make_report()
    written = r.write(tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["demo.csv", "demo.json"]
    assert (tmp_path / "demo.csv").read_text() == r.to_csv()
    assert (tmp_path / "demo.json").read_text() == r.to_json()
