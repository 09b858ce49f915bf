"""Noise filtration over event clusters via density-based outlier scores.

Clusters of one window are split into large (LC) and small (SC) by size:
with clusters sorted by size descending, the boundary ``b`` is the
smallest index where the cumulative size reaches ``alpha`` of the window's
events and the size drops by at least a factor ``beta`` to the next
cluster (the drop condition is vacuous at the last index). Events in
large clusters are scored against their own cluster; events in small
clusters are scored against the nearest large cluster, normalizing the
distance by that cluster's average member distance, so a score near 1
means "as central as a typical member".

An event is dropped when its score exceeds the configured threshold, and
a whole cluster is dropped when at least the configured fraction of its
members were dropped. The ``strict-sc`` mode instead discards every
small-cluster event unconditionally.

Scoring reads an immutable window encoding, so events may be scored
concurrently; the drop decisions are pure functions of the scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aggregation import EventCluster
from .encoding import WindowEncoding
from .model import NormalizedEvent, PipelineConfig


class EmptyInput(ValueError):
    """Partitioning needs at least one cluster."""


class NoLargeCluster(ValueError):
    """A small-cluster event has no large cluster to be scored against."""


@dataclass(frozen=True)
class ClusterPartition:
    """Large/small split of one window's clusters, sizes descending."""

    lc: tuple[EventCluster, ...]
    sc: tuple[EventCluster, ...]
    boundary_b: int  # 1-based index of the last large cluster


@dataclass(frozen=True)
class LdcofScore:
    """Outlier score of one event relative to the large-cluster landscape."""

    event_id: str
    score: float
    nearest_large_cluster: str


@dataclass(frozen=True)
class DroppedEvent:
    event_id: str
    cluster_id: str
    score: float
    reason: str  # "score", "cluster-discard", or "strict-sc"


def partition_lc_sc(
    clusters: Sequence[EventCluster], alpha: float, beta: float
) -> ClusterPartition:
    """Split clusters into large and small by the alpha/beta boundary."""
    if not clusters:
        raise EmptyInput("no clusters to partition")
    ordered = sorted(clusters, key=lambda c: -c.size)
    sizes = [c.size for c in ordered]
    total = sum(sizes)
    k = len(ordered)
    boundary = k
    cumulative = 0
    for b in range(1, k + 1):
        cumulative += sizes[b - 1]
        drop_ok = b == k or sizes[b - 1] / sizes[b] >= beta
        if cumulative >= total * alpha and drop_ok:
            boundary = b
            break
    return ClusterPartition(
        lc=tuple(ordered[:boundary]),
        sc=tuple(ordered[boundary:]),
        boundary_b=boundary,
    )


def cluster_centroid(
    cluster: EventCluster, encoding: WindowEncoding
) -> tuple[np.ndarray, np.ndarray]:
    """Centroid of a cluster in the window's encoded feature space.

    Numeric dimensions take the arithmetic mean of present values;
    categorical dimensions take the mode, breaking ties toward the
    lexicographically smallest value.
    """
    return encoding.centroid(encoding.rows(cluster.members))


def _average_distance(
    cluster: EventCluster, encoding: WindowEncoding
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    rows = encoding.rows(cluster.members)
    cnum, ccat = encoding.centroid(rows)
    dists = encoding.distances_to(rows, cnum, ccat)
    return cnum, ccat, dists, float(dists.mean())


def score_partition(
    partition: ClusterPartition, encoding: WindowEncoding
) -> dict[str, LdcofScore]:
    """Score every event of the partition.

    Large-cluster members are scored within their own cluster. Small-
    cluster members take the distance to the nearest large-cluster
    centroid, normalized by that cluster's average distance; a cluster
    with zero spread scores its own members 0 and makes outside events
    score infinite.
    """
    scores: dict[str, LdcofScore] = {}
    lc_centroids = []
    for cluster in partition.lc:
        cnum, ccat, dists, avg = _average_distance(cluster, encoding)
        lc_centroids.append((cluster, cnum, ccat, avg))
        for event, d in zip(cluster.members, dists):
            value = float(d / avg) if avg > 0 else 0.0
            scores[event.event_id] = LdcofScore(event.event_id, value, cluster.cluster_id)
    if partition.sc and not partition.lc:
        raise NoLargeCluster("small clusters present but no large cluster")
    for cluster in partition.sc:
        rows = encoding.rows(cluster.members)
        best = np.full(len(rows), np.inf)
        best_idx = np.zeros(len(rows), dtype=np.int64)
        for idx, (_, cnum, ccat, _) in enumerate(lc_centroids):
            dists = encoding.distances_to(rows, cnum, ccat)
            closer = dists < best
            best[closer] = dists[closer]
            best_idx[closer] = idx
        for i, event in enumerate(cluster.members):
            ref, _, _, avg = lc_centroids[best_idx[i]]
            value = float(best[i] / avg) if avg > 0 else math.inf
            scores[event.event_id] = LdcofScore(event.event_id, value, ref.cluster_id)
    return scores


def ldcof_score(
    event: NormalizedEvent, partition: ClusterPartition, encoding: WindowEncoding
) -> LdcofScore:
    """Score a single event of the partition (see ``score_partition``)."""
    scores = score_partition(partition, encoding)
    try:
        return scores[event.event_id]
    except KeyError:
        raise ValueError(f"{event.event_id} is not part of the partition") from None


def _rebuild(cluster: EventCluster, survivors: list[NormalizedEvent]) -> EventCluster:
    if len(survivors) == len(cluster.members):
        return cluster
    return EventCluster(
        cluster_id=cluster.cluster_id,
        sensor_id=cluster.sensor_id,
        event_type=cluster.event_type,
        base_event_id=survivors[0].event_id,
        members=tuple(survivors),
        window=(survivors[0].timestamp, survivors[-1].timestamp),
    )


def filter_outliers(
    clusters: Sequence[EventCluster],
    config: PipelineConfig,
    encoding: WindowEncoding,
) -> tuple[list[EventCluster], list[DroppedEvent]]:
    """Drop noisy events and clusters; keep everything else untouched.

    Returns the kept clusters in their original order (original membership
    order inside) plus an audit trail of every dropped event. Kept events
    and dropped events together account for exactly the input events.
    """
    if not clusters:
        return [], []
    partition = partition_lc_sc(clusters, config.alpha, config.beta)
    scores = score_partition(partition, encoding)
    small = {c.cluster_id for c in partition.sc}

    kept: list[EventCluster] = []
    dropped: list[DroppedEvent] = []
    for cluster in clusters:
        if config.filter_mode == "strict-sc" and cluster.cluster_id in small:
            for event in cluster.members:
                dropped.append(DroppedEvent(event.event_id, cluster.cluster_id,
                                            scores[event.event_id].score, "strict-sc"))
            continue
        survivors: list[NormalizedEvent] = []
        casualties: list[DroppedEvent] = []
        for event in cluster.members:
            score = scores[event.event_id].score
            if score > config.gamma_ldcof:
                casualties.append(
                    DroppedEvent(event.event_id, cluster.cluster_id, score, "score"))
            else:
                survivors.append(event)
        if len(casualties) / cluster.size >= config.delta_discard:
            dropped.extend(casualties)
            for event in survivors:
                dropped.append(DroppedEvent(event.event_id, cluster.cluster_id,
                                            scores[event.event_id].score, "cluster-discard"))
            continue
        dropped.extend(casualties)
        kept.append(_rebuild(cluster, survivors))
    return kept, dropped
