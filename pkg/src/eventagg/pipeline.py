"""End-to-end orchestration: window, cluster, filter, summarize, measure.

The event stream is cut into tumbling batching windows aligned to the
first event's timestamp. Each window is clustered and filtered on its
own (the large/small split is relative to the window's population);
surviving clusters from all windows are then summarized in order. The
reported processing time covers exactly these three phases, not parsing
or serialization.

Observable outputs are fully determined by the input events and the
configuration: cluster ids, output order, and serialized bytes never
depend on wall-clock or execution interleaving.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aggregation import EventCluster, aggregate_window
from .encoding import encode_window
from .filtration import DroppedEvent, filter_outliers
from .metrics import RunMetrics, davies_bouldin, dunn_index, ear, epr, run_ilr
from .model import NormalizedEvent, PipelineConfig, chronological_sort
from .summarization import AggregatedEvent, summarize_all


@dataclass
class PipelineResult:
    """Everything one pipeline execution produced."""

    events_total: int
    clusters: list[EventCluster] = field(default_factory=list)
    kept_clusters: list[EventCluster] = field(default_factory=list)
    dropped: list[DroppedEvent] = field(default_factory=list)
    aggregated: list[AggregatedEvent] = field(default_factory=list)
    metrics: RunMetrics | None = None
    windows: int = 0


def _window_slices(events: list[NormalizedEvent], atw_ms: int) -> list[tuple[int, int, int]]:
    """(start_index, end_index, window_start_ms) per tumbling window."""
    ts = np.fromiter((e.timestamp for e in events), dtype=np.int64, count=len(events))
    first = int(ts[0])
    slices = []
    lo = 0
    while lo < len(events):
        window_start = first + ((int(ts[lo]) - first) // atw_ms) * atw_ms
        hi = int(np.searchsorted(ts, window_start + atw_ms, side="left"))
        slices.append((lo, hi, window_start))
        lo = hi
    return slices


def run_events(
    events: Sequence[NormalizedEvent],
    config: PipelineConfig,
    compute_quality: bool = False,
) -> PipelineResult:
    """Run clustering, filtration, and summarization over an event stream."""
    result = PipelineResult(events_total=len(events))
    started = time.perf_counter()
    quality_points: list[tuple[float, float, int]] = []  # (dunn, dbi, weight)
    if events:
        ordered = chronological_sort(events)
        atw_ms = config.atw_seconds * 1000
        slices = _window_slices(ordered, atw_ms)
        result.windows = len(slices)
        cluster_count = 0
        for lo, hi, window_start in slices:
            window = ordered[lo:hi]
            clusters = aggregate_window(window, config, id_start=cluster_count)
            cluster_count += len(clusters)
            encoding = encode_window(window, config, window_start)
            kept, dropped = filter_outliers(clusters, config, encoding)
            result.clusters.extend(clusters)
            result.kept_clusters.extend(kept)
            result.dropped.extend(dropped)
            if compute_quality and len(clusters) >= 2:
                points = encoding.euclidean_points(np.arange(len(window)))
                labels = np.empty(len(window), dtype=np.int64)
                for ci, cluster in enumerate(clusters):
                    labels[encoding.rows(cluster.members)] = ci
                quality_points.append(
                    (dunn_index(points, labels), davies_bouldin(points, labels), len(window))
                )
        result.aggregated = summarize_all(result.kept_clusters, config)
    elapsed = max(time.perf_counter() - started, 1e-9)

    if events:
        dunn = dbi = None
        if compute_quality and quality_points:
            total_w = sum(w for _, _, w in quality_points)
            dunn = sum(d * w for d, _, w in quality_points) / total_w
            dbi = sum(b * w for _, b, w in quality_points) / total_w
        result.metrics = RunMetrics(
            total_events=len(events),
            aggregated_events=len(result.aggregated),
            processing_seconds=elapsed,
            ear_percent=ear(len(events), len(result.aggregated)),
            epr_events_per_sec=epr(len(events), elapsed),
            ilr=run_ilr(list(events), result.aggregated, config.concept_trees, config),
            dunn=dunn,
            dbi=dbi,
        )
    else:
        result.metrics = RunMetrics(
            total_events=0,
            aggregated_events=0,
            processing_seconds=elapsed,
            ear_percent=None,
            epr_events_per_sec=0.0,
            ilr=None,
        )
    return result


def with_thresholds(
    config: PipelineConfig, vectors: dict[str, Sequence[int]]
) -> PipelineConfig:
    """Copy of the configuration with some sensors' threshold vectors replaced."""
    sensors = []
    for profile in config.sensors:
        if profile.sensor_id in vectors:
            replacement = tuple(int(v) for v in vectors[profile.sensor_id])
            if len(replacement) != len(profile.sfs):
                raise ValueError(
                    f"{profile.sensor_id}: vector length {len(replacement)} != |sfs|"
                )
            profile = dataclasses.replace(profile, sf_thresholds=replacement)
        sensors.append(profile)
    return dataclasses.replace(config, sensors=tuple(sensors))


def with_twl(config: PipelineConfig, twl_seconds: int) -> PipelineConfig:
    """Copy of the configuration with every sensor's window set to one value.

    The batching window is enlarged when needed so it still covers the
    largest per-sensor window.
    """
    sensors = tuple(
        dataclasses.replace(p, twl_seconds=twl_seconds) for p in config.sensors
    )
    return dataclasses.replace(
        config, sensors=sensors, atw_seconds=max(config.atw_seconds, twl_seconds)
    )
