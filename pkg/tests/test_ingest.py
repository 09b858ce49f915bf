from __future__ import annotations

import pytest

from eventagg.ingest import (
    HeaderMismatch,
    MalformedTimestamp,
    normalize_stream,
    parse_line,
    read_olf_csv,
    write_olf_csv,
)
from eventagg.model import ValueKind, validate_event
from eventagg.cli import render_line

from helpers import ip, make_event, make_profile

NIDS_LINE = ('2005-02-25T10:00:00.000Z NIDS alert sig="Ping Sweep" '
             'src=172.25.110.11:631 dst=192.168.1.12:80 ttl=63 proto=ICMP')


@pytest.fixture
def nids(fig7_config, fig7_patterns):
    profile = fig7_config.profile("NIDS")
    pattern = next(p for p in fig7_patterns if p.sensor_id == "NIDS")
    return profile, pattern


class TestParseLine:
    def test_alert_line_extracts_addresses(self, nids):
        profile, pattern = nids
        event = parse_line(NIDS_LINE, pattern, profile, sequence=1)
        assert event is not None
        assert event.features["Source IP"] == ip("172.25.110.11")
        assert event.features["Destination IP"] == ip("192.168.1.12")
        assert event.event_type == "Ping Sweep"
        assert event.features["Event ID"] == "Ping Sweep"  # mirrored
        assert event.event_id == "NIDS-1"
        assert validate_event(event, profile).ok

    def test_empty_line_is_no_match(self, nids):
        profile, pattern = nids
        assert parse_line("", pattern, profile) is None

    def test_invalid_calendar_date_is_malformed(self, nids):
        profile, pattern = nids
        bad = NIDS_LINE.replace("2005-02-25", "2005-02-30")
        with pytest.raises(MalformedTimestamp):
            parse_line(bad, pattern, profile)


class TestNormalizeStream:
    def test_fig7_logs_normalize_to_twelve_events(self, fig7_config, fig7_patterns,
                                                  fig7_events):
        templates = {p.sensor_id: p.template for p in fig7_patterns}
        lines = [render_line(e, templates[e.sensor_id]) for e in fig7_events]
        profiles = {p.sensor_id: p for p in fig7_config.sensors}
        events, rejects = normalize_stream(lines, fig7_patterns, profiles)
        assert rejects.count == 0
        assert len(events) == 12
        counts = {}
        for e in events:
            counts[e.sensor_id] = counts.get(e.sensor_id, 0) + 1
        assert counts == {"NIDS": 5, "Firewall": 4, "HostOS": 3}

    def test_empty_source(self, fig7_config, fig7_patterns):
        profiles = {p.sensor_id: p for p in fig7_config.sensors}
        events, rejects = normalize_stream([], fig7_patterns, profiles)
        assert events == [] and rejects.count == 0

    def test_thousand_duplicates_get_distinct_ids(self, fig7_config, fig7_patterns):
        profiles = {p.sensor_id: p for p in fig7_config.sensors}
        events, rejects = normalize_stream([NIDS_LINE] * 1000, fig7_patterns, profiles)
        assert rejects.count == 0
        assert len(events) == 1000  # oracle: line count equality
        assert len({e.event_id for e in events}) == 1000

    def test_rejects_are_counted_with_samples(self, fig7_config, fig7_patterns):
        profiles = {p.sensor_id: p for p in fig7_config.sensors}
        lines = ["garbage"] * 150 + [NIDS_LINE]
        events, rejects = normalize_stream(lines, fig7_patterns, profiles)
        assert len(events) == 1
        assert rejects.count == 150
        assert len(rejects.samples) == 100
        assert rejects.count + len(events) == len(lines)

    def test_accepted_events_preserve_input_order(self, fig7_config, fig7_patterns):
        profiles = {p.sensor_id: p for p in fig7_config.sensors}
        lines = [
            NIDS_LINE.replace(":631", f":{700 + i}") for i in range(10)
        ]
        events, _ = normalize_stream(lines, fig7_patterns, profiles)
        assert [e.features["Source Port"] for e in events] == list(range(700, 710))


PROFILE = make_profile(
    sensor_id="S",
    features=(("Name", ValueKind.TEXT), ("Addr", ValueKind.IPADDR),
              ("Count", ValueKind.INTEGER), ("Seen", ValueKind.TIMESTAMP)),
    nsfs=("Addr",),
    sfs=(),
    thresholds=(),
)


class TestOlfCsvRoundTrip:
    def test_three_events_round_trip(self, tmp_path):
        events = [
            make_event("S-1", ts=1109325600000, features={
                "Name": "alpha", "Addr": ip("10.0.0.1"), "Count": 3,
                "Seen": 1109325600500}),
            make_event("S-2", ts=1109325601000, features={
                "Name": None, "Addr": None, "Count": None, "Seen": None}),
            make_event("S-3", ts=1109325602000, merge_count=4, features={
                "Name": "beta", "Addr": ip("2001:db8::1"), "Count": -7,
                "Seen": 1109325600000}),
        ]
        path = tmp_path / "s.csv"
        write_olf_csv(events, path, PROFILE)
        assert read_olf_csv(path, PROFILE) == events

    def test_quoting_survives_round_trip(self, tmp_path):
        # oracle: byte-level field comparison after the round trip
        tricky = 'a,b "quoted" and ,, more'
        events = [make_event("S-1", ts=0, features={
            "Name": tricky, "Addr": None, "Count": None, "Seen": None})]
        path = tmp_path / "s.csv"
        write_olf_csv(events, path, PROFILE)
        restored = read_olf_csv(path, PROFILE)
        assert restored[0].features["Name"] == tricky

    def test_shuffled_header_is_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        write_olf_csv([], path, PROFILE)
        text = path.read_text().replace("Name,Addr", "Addr,Name")
        path.write_text(text)
        with pytest.raises(HeaderMismatch):
            read_olf_csv(path, PROFILE)

    def test_validated_events_round_trip_bit_identically(self, tmp_path, fig7_config,
                                                         fig7_events):
        profile = fig7_config.profile("NIDS")
        mine = [e for e in fig7_events if e.sensor_id == "NIDS"]
        assert all(validate_event(e, profile).ok for e in mine)
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_olf_csv(mine, first, profile)
        write_olf_csv(read_olf_csv(first, profile), second, profile)
        assert first.read_bytes() == second.read_bytes()
