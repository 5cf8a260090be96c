"""Scenario files: strict schema, fixtures, validation diagnostics."""

import json

import pytest

from pidsim.errors import ScenarioError
from pidsim.scenario import (
    load_scenario,
    parse_scenario,
    shipped_fixture_names,
    shipped_fixture_path,
)


def _minimal(**overrides):
    data = {
        "schema_version": 1,
        "mode": "stepped",
        "seed": 1,
        "local": "001122334455",
        "devices": [
            {"mac": "001122334455", "name": "client", "position": [0, 0]},
        ],
        "file": {"name": "cpi.txt", "text": "hi"},
    }
    data.update(overrides)
    return data


def _write(tmp_path, data):
    path = tmp_path / "scenario.scn"
    path.write_text(json.dumps(data))
    return str(path)


def test_shipped_fixtures_present():
    assert {"fig6_classroom", "live_test", "late_arrival"} <= set(
        shipped_fixture_names())


def test_fig6_fixture_contents():
    sc = load_scenario(shipped_fixture_path("fig6_classroom"))
    assert sc.mode == "stepped"
    by_mac = {d.mac: d for d in sc.devices}
    assert len(sc.devices) == 6  # client + the five discovered devices
    assert by_mac["00179A235EDD"].name == "EB-LAPTOP-D400"
    assert by_mac["0007616110B1"].name == "Dell BT Mouse"
    assert by_mac["00164410697A"].name == "DELL BH200"
    counts = sorted(len(d.services) for d in sc.devices if d.mac != sc.local)
    assert counts == [0, 0, 1, 4, 7]
    laptop = by_mac["00179A235EDD"]
    [ftp] = [r for r in laptop.services if r.is_ftp()]
    assert ftp.connection_url.render() == "http://00179A235EDD:8001/file-transfer/"


def test_live_test_fixture_contents():
    sc = load_scenario(shipped_fixture_path("live_test"))
    assert sc.mode == "proactive"
    others = [d for d in sc.devices if d.mac != sc.local]
    assert len(others) == 12
    members = sc.roster.members
    assert len(members) == 8
    ftp_members = [d for d in others
                   if d.mac in members and any(r.is_ftp() for r in d.services)]
    assert len(ftp_members) == 7
    dummies = [d for d in others if d.mac in members and not d.services]
    assert len(dummies) == 1
    ftp_non_members = [d for d in others if d.mac not in members
                       and any(r.is_ftp() for r in d.services)]
    assert len(ftp_non_members) == 1
    assert sc.usage is not None


def test_parse_rejects_unknown_scenario_key():
    with pytest.raises(ScenarioError, match="unknown field.*typo_key"):
        parse_scenario(_minimal(typo_key=1))


def test_parse_rejects_unknown_nested_keys():
    data = _minimal()
    data["devices"][0]["rssi"] = -40
    with pytest.raises(ScenarioError, match=r"devices\[0\].*rssi"):
        parse_scenario(data)
    data = _minimal(radio={"rangem": 5})
    with pytest.raises(ScenarioError, match="radio.*rangem"):
        parse_scenario(data)


def test_parse_rejects_duplicate_mac():
    data = _minimal()
    data["devices"].append({"mac": "001122334455", "name": "again",
                            "position": [1, 1]})
    with pytest.raises(ScenarioError, match="duplicate MAC"):
        parse_scenario(data)


def test_parse_rejects_bad_schema_version():
    with pytest.raises(ScenarioError, match="schema_version"):
        parse_scenario(_minimal(schema_version=99))


def test_parse_rejects_unknown_local():
    with pytest.raises(ScenarioError, match="local"):
        parse_scenario(_minimal(local="00179A235EDD"))


def test_parse_rejects_bad_mode_and_missing_roster():
    with pytest.raises(ScenarioError, match="mode"):
        parse_scenario(_minimal(mode="continuous"))
    with pytest.raises(ScenarioError, match="roster.*required"):
        parse_scenario(_minimal(mode="proactive"))


def test_parse_rejects_bad_window():
    data = _minimal(mode="proactive", roster={
        "course_id": "X", "members": [], "course_start": 100_000,
        "window_before": 240_000, "window_after": 240_000,
    })
    with pytest.raises(ScenarioError, match="roster"):
        parse_scenario(data)


def test_parse_rejects_conflicting_file_sources():
    with pytest.raises(ScenarioError, match="exactly one"):
        parse_scenario(_minimal(file={"name": "a", "text": "x", "hex": "00"}))


def test_parse_rejects_invalid_mac_string():
    data = _minimal()
    data["devices"][0]["mac"] = "NOT-A-MAC"
    with pytest.raises(ScenarioError, match="12-hex-digit"):
        parse_scenario(data)


def test_parse_allows_notes_everywhere():
    data = _minimal(notes="top")
    data["devices"][0]["notes"] = "device note"
    sc = parse_scenario(data)
    assert sc.local == "001122334455"


def test_load_reports_json_error_with_line(tmp_path):
    path = tmp_path / "broken.scn"
    path.write_text('{"schema_version": 1,\n  "mode": }')
    with pytest.raises(ScenarioError, match="broken.scn:2"):
        load_scenario(str(path))


def test_file_payload_sources(tmp_path):
    sc = parse_scenario(_minimal(file={"name": "a.bin", "hex": "deadbeef"}))
    assert sc.resolve_payload() == ("a.bin", bytes.fromhex("deadbeef"))

    blob = tmp_path / "notes.txt"
    blob.write_bytes(b"week one")
    data = _minimal(file={"path": str(blob)})
    sc = parse_scenario(data, base_dir=str(tmp_path))
    assert sc.resolve_payload() == ("notes.txt", b"week one")

    data = _minimal(file={"path": "missing.txt"})
    sc = parse_scenario(data, base_dir=str(tmp_path))
    with pytest.raises(ScenarioError, match="file-not-found"):
        sc.resolve_payload()


def test_build_world_is_fresh_each_time():
    sc = load_scenario(shipped_fixture_path("fig6_classroom"))
    w1 = sc.build_world(1)
    w2 = sc.build_world(1)
    assert w1.devices is not w2.devices
    w1.device("00179A235EDD").inbox["x"] = b"y"
    assert w2.device("00179A235EDD").inbox == {}


def test_scenario_radio_overrides():
    data = _minimal(radio={"range_m": 3.5, "inquiry_duration": 8000})
    sc = parse_scenario(data)
    assert sc.radio.range_m == 3.5
    assert sc.radio.inquiry_duration == 8000
    assert sc.radio.link_rate_bps == 3_000_000
