"""Evaluation metrics for aggregation runs.

Volume and speed are measured by the reduction ratio (percentage of input
events that disappeared from the output) and the processing rate in
events per second. Information loss is measured per merge group: the
concepts that were folded together lose the information difference to
their least common ancestor, normalized by their total information
content, giving a value in [0, 1] per group that is aggregated into a
run-level number by event-count weighting.

Cluster quality uses two internal validity indexes over the Euclidean
embedding of the encoded feature space: the ratio of the smallest
inter-cluster distance to the largest cluster diameter (bigger is
better), and the averaged worst-case ratio of cluster scatter sums to
centroid separation (smaller is better).

All functions here are pure; sweep helpers run one independent pipeline
execution per grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .concept import ConceptTree, NoMatchingLeaf
from .model import LogBase, NormalizedEvent, PipelineConfig
from .summarization import AggregatedEvent


class ZeroInformation(ValueError):
    """Information loss is undefined when every concept carries none."""


def ear(total: int, aggregated: int) -> float:
    """Event reduction as a percentage of the input volume."""
    if total < 1:
        raise ValueError("total must be >= 1")
    if aggregated > total:
        raise ValueError("aggregated count cannot exceed the total")
    return (1.0 - aggregated / total) * 100.0


def epr(processed: int, seconds: float) -> float:
    """Processing rate in events per second."""
    if seconds <= 0:
        raise ValueError("seconds must be positive")
    return processed / seconds


def ilr_from_ic(ic_values: Sequence[float], ic_lca: float) -> float:
    """Information loss ratio from precomputed information contents."""
    total = sum(ic_values)
    if total <= 0:
        raise ZeroInformation("all concepts carry zero information")
    return sum(ic - ic_lca for ic in ic_values) / total


def ilr(concepts: Iterable[str], tree: ConceptTree, log_base: LogBase = LogBase.E) -> float:
    """Information loss of replacing the concepts by their common ancestor."""
    concepts = list(concepts)
    if not concepts:
        raise ValueError("ilr of an empty concept set")
    ancestor = tree.lca(set(concepts))
    ic_lca = tree.information_content(ancestor, log_base)
    return ilr_from_ic([tree.information_content(c, log_base) for c in concepts], ic_lca)


def run_ilr(
    inputs: Sequence[NormalizedEvent],
    outputs: Sequence[AggregatedEvent],
    trees: dict[str, ConceptTree],
    config: PipelineConfig,
) -> float:
    """Event-count-weighted information loss over a whole run.

    For every merge group and every summarizable feature of its sensor,
    the constituents' raw values are classified onto the feature's tree
    and the loss to their common ancestor is computed. Constituents whose
    value has no matching leaf (or is absent) carry no measurable concept
    and are skipped, as are groups whose concepts all sit at the root.
    """
    by_id = {e.event_id: e for e in inputs}
    classified: dict[tuple[str, object], str | None] = {}  # memo per (feature, value)
    ic_memo: dict[tuple[str, str], float] = {}
    weighted = 0.0
    weight = 0.0
    for out in outputs:
        profile = config.profile(out.sensor_id)
        sources = [by_id[eid] for eid in out.provenance if eid in by_id]
        if not sources:
            continue
        for feature in profile.sfs:
            tree = trees[feature]
            counts: dict[str, int] = {}
            for src in sources:
                value = src.features.get(feature)
                key = (feature, value)
                if key not in classified:
                    try:
                        classified[key] = tree.classify(value)
                    except NoMatchingLeaf:
                        classified[key] = None
                concept = classified[key]
                if concept is not None:
                    counts[concept] = counts.get(concept, 0) + 1
            if not counts:
                continue
            ancestor = tree.lca(counts)
            total_ic = 0.0
            lost_ic = 0.0
            ic_lca = _ic(tree, feature, ancestor, config.log_base, ic_memo)
            for concept, n in counts.items():
                ic = _ic(tree, feature, concept, config.log_base, ic_memo)
                total_ic += ic * n
                lost_ic += (ic - ic_lca) * n
            members = sum(counts.values())
            if total_ic <= 0:
                continue  # every concept sits at the root; no measurable loss
            weighted += (lost_ic / total_ic) * members
            weight += members
    return weighted / weight if weight else 0.0


def _ic(tree: ConceptTree, feature: str, concept: str, base: LogBase,
        memo: dict[tuple[str, str], float]) -> float:
    key = (feature, concept)
    if key not in memo:
        memo[key] = tree.information_content(concept, base)
    return memo[key]


def dunn_index(points: np.ndarray, labels: np.ndarray) -> float:
    """Smallest inter-cluster distance over largest cluster diameter.

    Euclidean, exhaustive over point pairs. Zero separation gives 0; a
    positive separation with all-degenerate clusters gives the infinite
    sentinel.
    """
    labels = np.asarray(labels, dtype=np.int64)
    points = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if len(np.unique(labels)) < 2:
        raise ValueError("need at least two clusters")
    min_inter, max_diam = _kernels.min_inter_max_diam(points, labels)
    if min_inter == 0.0:
        return 0.0
    if max_diam == 0.0:
        return math.inf
    return min_inter / max_diam


def davies_bouldin(points: np.ndarray, labels: np.ndarray) -> float:
    """Average worst-case scatter-to-separation ratio over clusters.

    Scatter is the mean member-to-centroid distance. Coincident centroids
    make the ratio infinite rather than raising.
    """
    labels = np.asarray(labels, dtype=np.int64)
    points = np.asarray(points, dtype=np.float64)
    ids = np.unique(labels)
    if len(ids) < 2:
        raise ValueError("need at least two clusters")
    centroids = np.stack([points[labels == c].mean(axis=0) for c in ids])
    scatter = np.array([
        float(np.linalg.norm(points[labels == c] - centroids[i], axis=1).mean())
        for i, c in enumerate(ids)
    ])
    total = 0.0
    for i in range(len(ids)):
        worst = 0.0
        for j in range(len(ids)):
            if i == j:
                continue
            sep = float(np.linalg.norm(centroids[i] - centroids[j]))
            ratio = (scatter[i] + scatter[j]) / sep if sep > 0 else math.inf
            worst = max(worst, ratio)
        total += worst
    return total / len(ids)


@dataclass
class RunMetrics:
    """Summary of one pipeline execution.

    ``ear_percent`` and ``ilr`` are None for an empty run; ``dunn`` and
    ``dbi`` are None when quality indexes were not requested or not
    defined (fewer than two clusters).
    """

    total_events: int
    aggregated_events: int
    processing_seconds: float
    ear_percent: float | None
    epr_events_per_sec: float | None
    ilr: float | None
    dunn: float | None = None
    dbi: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def apc_sweep(
    events: Sequence[NormalizedEvent],
    config: PipelineConfig,
    threshold_vectors: Sequence[dict[str, Sequence[int]]],
) -> list[tuple[dict[str, tuple[int, ...]], float, float]]:
    """Run the full pipeline once per threshold vector.

    Each entry maps sensor ids to replacement threshold vectors; sensors
    not named keep their configured vector. Returns (vector, reduction
    percentage, information loss) per entry, in the given order.
    """
    from .pipeline import run_events, with_thresholds  # deferred: sweeps sit above the pipeline

    out = []
    for vectors in threshold_vectors:
        swept = with_thresholds(config, vectors)
        result = run_events(events, swept)
        normalized = {sid: tuple(v) for sid, v in vectors.items()}
        out.append((normalized, result.metrics.ear_percent, result.metrics.ilr))
    return out
