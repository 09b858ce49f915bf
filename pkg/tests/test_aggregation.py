from __future__ import annotations

import pytest

from eventagg.aggregation import (
    ConfigMissingSensor,
    aggregate_window,
    check_similarity,
    classify_by_sensor,
    rules_for_profile,
)

from helpers import (
    brute_force_clusters,
    cluster_set,
    make_config,
    make_event,
    make_profile,
    random_instance,
)


class TestClassifyBySensor:
    def test_fig7_distribution(self, fig7_events, fig7_config):
        groups = classify_by_sensor(fig7_events, fig7_config.sensors)
        assert {k: [e.event_id for e in v] for k, v in groups.items()} == {
            "NIDS": ["e1", "e3", "e5", "e6", "e9"],
            "Firewall": ["e2", "e4", "e7", "e8"],
            "HostOS": ["e10", "e11", "e12"],
        }

    def test_empty(self, fig7_config):
        assert classify_by_sensor([], fig7_config.sensors) == {}

    def test_single_sensor(self):
        events = [make_event(f"e{i}", ts=i) for i in range(5)]
        groups = classify_by_sensor(events, [make_profile()])
        assert len(groups) == 1 and len(groups["S"]) == 5


class TestCheckSimilarity:
    def test_same_targets_and_type(self, fig7_events, fig7_config):
        by_id = {e.event_id: e for e in fig7_events}
        rules = rules_for_profile(fig7_config.profile("NIDS"))
        assert check_similarity(by_id["e1"], by_id["e3"], rules)

    def test_different_type(self, fig7_events, fig7_config):
        by_id = {e.event_id: e for e in fig7_events}
        rules = rules_for_profile(fig7_config.profile("NIDS"))
        assert not check_similarity(by_id["e6"], by_id["e1"], rules)

    def test_reflexive(self, fig7_events, fig7_config):
        by_id = {e.event_id: e for e in fig7_events}
        rules = rules_for_profile(fig7_config.profile("NIDS"))
        assert check_similarity(by_id["e1"], by_id["e1"], rules)

    def test_absence_matches_only_absence(self):
        rules = rules_for_profile(make_profile(nsfs=("A",)))
        absent = make_event("x", A=None)
        present = make_event("y", A="v")
        assert check_similarity(absent, absent, rules)
        assert not check_similarity(absent, present, rules)

    def test_rule_set_regenerates_from_profile(self, fig7_config):
        rules = rules_for_profile(fig7_config.profile("Firewall"))
        assert [r.feature for r in rules] == ["Source IP", "Destination IP"]
        assert all(r.relation == "equality" for r in rules)


class TestAggregateWindow:
    def test_fig7_clusters(self, fig7_result):
        got = {
            c.cluster_id: [m.event_id for m in c.members] for c in fig7_result.clusters
        }
        assert got == {
            "C0": ["e1", "e3", "e5"],
            "C1": ["e6", "e9"],
            "C2": ["e2", "e4"],
            "C3": ["e7"],
            "C4": ["e8"],
            "C5": ["e10"],
            "C6": ["e11", "e12"],
        }
        for c in fig7_result.clusters:
            assert c.base_event_id == c.members[0].event_id

    def test_mutually_dissimilar_events_make_singletons(self):
        config = make_config([make_profile(nsfs=("A",), sfs=(), thresholds=())])
        events = [make_event(f"e{i}", ts=i * 10, A=f"v{i}") for i in range(6)]
        clusters = aggregate_window(events, config)
        assert len(clusters) == 6
        assert all(c.size == 1 for c in clusters)

    def test_unknown_sensor_is_rejected(self, fig7_config):
        with pytest.raises(ConfigMissingSensor):
            aggregate_window([make_event("x", sensor_id="Mystery")], fig7_config)

    def test_unbounded_window_matches_brute_force(self):
        # window length >= batching window: clustering degenerates to
        # equality groups under forward-scan base assignment
        for seed in range(30):
            events, config = random_instance(seed)
            clusters = aggregate_window(events, config)
            assert cluster_set(clusters) == brute_force_clusters(events, config)

    def test_partition_property(self):
        for seed in range(40, 60):
            events, config = random_instance(seed)
            clusters = aggregate_window(events, config)
            seen = [m.event_id for c in clusters for m in c.members]
            assert sorted(seen) == sorted(e.event_id for e in events)

    def test_members_within_window_of_base(self):
        for seed in range(60, 80):
            events, config = random_instance(seed)
            twl = {p.sensor_id: p.twl_seconds * 1000 for p in config.sensors}
            for c in aggregate_window(events, config):
                base = c.members[0]
                for m in c.members:
                    assert m.timestamp - base.timestamp < twl[c.sensor_id]
                assert list(c.members) == sorted(
                    c.members, key=lambda e: (e.timestamp, e.event_id))

    def test_cluster_count_non_increasing_in_twl(self):
        events = [
            make_event(f"e{i}", ts=ts * 1000, A="x")
            for i, ts in enumerate([0, 10, 25, 80, 130, 131, 200, 290, 300])
        ]
        counts = []
        for twl in (5, 20, 60, 150, 400):
            config = make_config(
                [make_profile(nsfs=("A",), sfs=(), thresholds=(), twl=twl)])
            counts.append(len(aggregate_window(events, config)))
        assert counts == sorted(counts, reverse=True)

    def test_singleton_input(self):
        config = make_config([make_profile(nsfs=("A",), sfs=(), thresholds=())])
        clusters = aggregate_window([make_event("only", A="x")], config)
        assert len(clusters) == 1 and clusters[0].size == 1

    def test_determinism(self):
        events, config = random_instance(7)
        first = aggregate_window(events, config)
        second = aggregate_window(list(reversed(events)), config)
        assert [(c.cluster_id, [m.event_id for m in c.members]) for c in first] == \
               [(c.cluster_id, [m.event_id for m in c.members]) for c in second]
