"""Per-cluster generalization of summarizable features and duplicate merging.

Features are processed in the profile's declared order. For each feature,
while the cluster holds more distinct values than the feature's threshold,
every value is lifted one level: a raw value is replaced by the concept it
classifies into, and a concept by its parent, except that concepts one
level below the root are kept (lifting to the root would erase the feature
entirely). After each lifting pass, events that became identical on all
features are merged: merge counts add up and provenance lists concatenate.
Values with no matching leaf stay literal and are simply never lifted.

Each pass either strictly lowers the total depth of the lifted values or
changes nothing, in which case the feature is finished even if the
distinct count still exceeds the threshold, so termination is structural.

Clusters summarize independently; merging never crosses cluster
boundaries because clusters already disagree on the features that
identify them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .aggregation import EventCluster
from .concept import ConceptTree, NoMatchingLeaf
from .model import (
    EVENT_TYPE_FEATURE,
    FeatureValue,
    NormalizedEvent,
    PipelineConfig,
    SensorProfile,
)


@dataclass(frozen=True, slots=True)
class AggregatedEvent(NormalizedEvent):
    """A summarized representative of one or more merged events.

    ``features`` holds the current (possibly generalized) values;
    ``generalized_features`` points out which of them are concept-tree
    nodes. ``provenance`` lists the constituent raw event ids and always
    has exactly ``merge_count`` entries; the record keeps the earliest
    constituent's timestamp and the full first/last span.
    """

    generalized_features: dict[str, str] = None
    provenance: tuple[str, ...] = ()
    first_ts: int = 0
    last_ts: int = 0


def lift_value(tree: ConceptTree, value: FeatureValue) -> FeatureValue:
    """One generalization step of a single value.

    Raw values climb onto their classified concept; concepts climb to
    their parent unless that parent is the root. Raises NoMatchingLeaf for
    raw values outside every leaf predicate.
    """
    if isinstance(value, str) and value in tree.nodes:
        if value == tree.root:
            return value
        parent = tree.parent[value]
        return value if parent == tree.root else parent
    return tree.classify(value)


def distinct_value_count(events: Sequence[NormalizedEvent], feature: str) -> int:
    """Distinct current values of one feature across the given events."""
    return len({e.features.get(feature) for e in events})


def generalize_feature(
    events: Sequence[NormalizedEvent], feature: str, tree: ConceptTree
) -> list[NormalizedEvent]:
    """Return the events with one feature lifted one level (see lift_value)."""
    out = []
    for e in events:
        lifted = lift_value(tree, e.features[feature])
        features = dict(e.features)
        features[feature] = lifted
        out.append(
            NormalizedEvent(e.event_id, e.sensor_id, e.timestamp, e.event_type,
                            features, e.merge_count)
        )
    return out


class _Record:
    """Mutable working state for one (possibly merged) output event."""

    __slots__ = ("values", "merge_count", "provenance", "first_ts", "last_ts", "rep")

    def __init__(self, event: NormalizedEvent):
        self.values = dict(event.features)
        self.merge_count = event.merge_count
        if isinstance(event, AggregatedEvent):
            self.provenance = list(event.provenance)
            self.first_ts = event.first_ts
            self.last_ts = event.last_ts
        else:
            self.provenance = [event.event_id]
            self.first_ts = event.timestamp
            self.last_ts = event.timestamp
        self.rep = event  # earliest constituent; supplies base fields

    def absorb(self, other: "_Record") -> None:
        self.merge_count += other.merge_count
        self.provenance.extend(other.provenance)
        self.first_ts = min(self.first_ts, other.first_ts)
        self.last_ts = max(self.last_ts, other.last_ts)


def _merge_duplicates(records: list[_Record], feature_names: tuple[str, ...]) -> list[_Record]:
    if len(records) < 2:
        return records
    merged: dict[tuple, _Record] = {}
    for rec in records:
        key = (rec.rep.event_type, *[rec.values.get(f) for f in feature_names])
        kept = merged.get(key)
        if kept is None:
            merged[key] = rec
        else:
            kept.absorb(rec)
    return list(merged.values())


def summarize_cluster(
    cluster: EventCluster,
    profile: SensorProfile,
    trees: dict[str, ConceptTree],
) -> list[AggregatedEvent]:
    """Generalize and merge one cluster; output ids are provisional.

    ``summarize_all`` renumbers the ids over the whole run.
    """
    names = profile.feature_names()
    # Group raw duplicates before building per-record state; under heavy
    # duplication this collapses the working set by orders of magnitude.
    grouped: dict[tuple, _Record] = {}
    for event in cluster.members:
        feats = event.features
        key = (event.event_type, *[feats.get(f) for f in names])
        kept = grouped.get(key)
        if kept is None:
            grouped[key] = _Record(event)
        else:
            kept.absorb(_Record(event))
    records = list(grouped.values())
    for feature in profile.sfs:
        tree = trees[feature]
        threshold = profile.threshold_of(feature)
        while len({rec.values[feature] for rec in records}) > threshold:
            changed = False
            for rec in records:
                value = rec.values[feature]
                try:
                    lifted = lift_value(tree, value)
                except NoMatchingLeaf:
                    continue  # raw value outside the taxonomy stays literal
                if lifted != value:
                    rec.values[feature] = lifted
                    changed = True
            if not changed:
                break
            records = _merge_duplicates(records, names)
    records.sort(key=lambda r: (r.first_ts, r.provenance[0]))
    out = []
    for i, rec in enumerate(records, start=1):
        generalized = {
            f: rec.values[f]
            for f in profile.sfs
            if isinstance(rec.values[f], str) and rec.values[f] in trees[f].nodes
        }
        event_type = rec.rep.event_type
        mirrored = rec.values.get(EVENT_TYPE_FEATURE)
        if isinstance(mirrored, str):
            event_type = mirrored
        out.append(
            AggregatedEvent(
                event_id=f"{cluster.cluster_id}-s{i}",
                sensor_id=cluster.sensor_id,
                timestamp=rec.rep.timestamp,
                event_type=event_type,
                features=rec.values,
                merge_count=rec.merge_count,
                generalized_features=generalized,
                provenance=tuple(rec.provenance),
                first_ts=rec.first_ts,
                last_ts=rec.last_ts,
            )
        )
    return out


def summarize_all(
    clusters: Iterable[EventCluster], config: PipelineConfig
) -> list[AggregatedEvent]:
    """Summarize every cluster, in order, with run-wide sequential ids."""
    out: list[AggregatedEvent] = []
    for cluster in clusters:
        profile = config.profile(cluster.sensor_id)
        out.extend(summarize_cluster(cluster, profile, config.concept_trees))
    return [
        AggregatedEvent(
            event_id=f"ae{i}",
            sensor_id=e.sensor_id,
            timestamp=e.timestamp,
            event_type=e.event_type,
            features=e.features,
            merge_count=e.merge_count,
            generalized_features=e.generalized_features,
            provenance=e.provenance,
            first_ts=e.first_ts,
            last_ts=e.last_ts,
        )
        for i, e in enumerate(out, start=1)
    ]
