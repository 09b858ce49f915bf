"""Per-window clustering of same-sensor events by exact feature equality.

Within one batching window, each sensor's events are sorted by time and
split into per-event-type arrays. A forward scan walks each array: the
earliest unconsumed event becomes a cluster base and absorbs every later
event that agrees with it on all aggregation rules and lies strictly
within the sensor's window length of the base. Events whose rule feature
is absent match only other absent values.

Because rule similarity is exact equality, the scan is equivalent to
splitting each array by the rule-feature tuple and cutting greedy time
windows inside each split; that is what the implementation does, with the
window cutting handled by a compiled kernel on large groups. The
brute-force scan is kept in the test suite as an oracle.

Per-sensor groups are independent, so callers may aggregate sensors or
windows concurrently; cluster ids are assigned deterministically from the
sorted result, never from execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .model import NormalizedEvent, PipelineConfig, SensorProfile, group_by_sensor, sort_key


class ConfigMissingSensor(KeyError):
    """An event's sensor has no profile in the pipeline configuration."""


@dataclass(frozen=True)
class AggregationRule:
    """Equality requirement on one non-summarizable feature of one sensor."""

    rule_id: str
    sensor_id: str
    feature: str
    relation: str = "equality"


def rules_for_profile(profile: SensorProfile) -> tuple[AggregationRule, ...]:
    """Derive the rule set from a profile; one rule per NSFS feature."""
    return tuple(
        AggregationRule(f"{profile.sensor_id}-r{i}", profile.sensor_id, feature)
        for i, feature in enumerate(profile.nsfs, start=1)
    )


@dataclass(frozen=True)
class EventCluster:
    """A group of same-sensor, same-type events equal on all rule features.

    Members are chronologically ordered and the base event is first; every
    member lies strictly within the sensor's window length of the base.
    """

    cluster_id: str
    sensor_id: str
    event_type: str
    base_event_id: str
    members: tuple[NormalizedEvent, ...]
    window: tuple[int, int]

    @property
    def size(self) -> int:
        return len(self.members)


def classify_by_sensor(
    events: Sequence[NormalizedEvent], profiles: Sequence[SensorProfile]
) -> dict[str, list[NormalizedEvent]]:
    """Partition events by sensor id; groups are chronologically sorted."""
    return group_by_sensor(events, [p.sensor_id for p in profiles])


def check_similarity(
    a: NormalizedEvent, b: NormalizedEvent, rules: Sequence[AggregationRule]
) -> bool:
    """True when two same-sensor events can share a cluster.

    Requires equal event types and agreement (including mutual absence) on
    every rule feature.
    """
    if a.sensor_id != b.sensor_id:
        raise ValueError("similarity is defined per sensor")
    if a.event_type != b.event_type:
        return False
    return all(a.features.get(r.feature) == b.features.get(r.feature) for r in rules)


def _cut_windows(group: list[NormalizedEvent], twl_ms: int) -> list[list[NormalizedEvent]]:
    """Split one chronologically sorted equal-key group into base windows."""
    n = len(group)
    if n == 1:
        return [group]
    if n >= 64:
        ts = np.fromiter((e.timestamp for e in group), dtype=np.int64, count=n)
        starts = _kernels.window_starts(ts, twl_ms)
        bounds = [*starts.tolist(), n]
        return [group[a:b] for a, b in zip(bounds, bounds[1:])]
    windows = []
    i = 0
    while i < n:
        bound = group[i].timestamp + twl_ms
        j = i + 1
        while j < n and group[j].timestamp < bound:
            j += 1
        windows.append(group[i:j])
        i = j
    return windows


def aggregate_window(
    events: Sequence[NormalizedEvent],
    config: PipelineConfig,
    id_start: int = 0,
) -> list[EventCluster]:
    """Cluster one batching window of events (Algorithm: forward scan).

    Every input event lands in exactly one cluster. Cluster ids are
    ``C<n>`` counting from ``id_start``, assigned per sensor in
    configuration order and by base-event time within a sensor, so
    identical input and configuration always yield identical ids.
    """
    by_sensor = group_by_sensor(events, [p.sensor_id for p in config.sensors])
    known = {p.sensor_id for p in config.sensors}
    for sensor_id in by_sensor:
        if sensor_id not in known:
            raise ConfigMissingSensor(sensor_id)

    clusters: list[EventCluster] = []
    counter = id_start
    for profile in config.sensors:
        group = by_sensor.get(profile.sensor_id)
        if not group:
            continue
        twl_ms = profile.twl_seconds * 1000
        nsfs = profile.nsfs
        partitions: dict[tuple, list[NormalizedEvent]] = {}
        for e in group:  # group is chronologically sorted
            feats = e.features
            key = (e.event_type, *[feats.get(f) for f in nsfs])
            bucket = partitions.get(key)
            if bucket is None:
                partitions[key] = [e]
            else:
                bucket.append(e)
        sensor_clusters: list[list[NormalizedEvent]] = []
        for bucket in partitions.values():
            sensor_clusters.extend(_cut_windows(bucket, twl_ms))
        sensor_clusters.sort(key=lambda members: sort_key(members[0]))
        for members in sensor_clusters:
            base = members[0]
            clusters.append(
                EventCluster(
                    cluster_id=f"C{counter}",
                    sensor_id=profile.sensor_id,
                    event_type=base.event_type,
                    base_event_id=base.event_id,
                    members=tuple(members),
                    window=(base.timestamp, members[-1].timestamp),
                )
            )
            counter += 1
    return clusters
