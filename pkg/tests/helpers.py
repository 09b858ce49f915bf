"""Shared test fixtures and independent oracles.

The oracles here deliberately re-implement the contracts under test in
the most literal way available (quadratic scans, explicit distance
matrices) and never call into the production code paths they check.
"""

from __future__ import annotations

import ipaddress
import random

from eventagg.model import (
    DetectionLevel,
    NormalizedEvent,
    PipelineConfig,
    SensorProfile,
    ValueKind,
)


def make_profile(
    sensor_id="S",
    features=(("A", ValueKind.TEXT), ("B", ValueKind.TEXT), ("N", ValueKind.INTEGER)),
    nsfs=("A",),
    sfs=("N",),
    thresholds=(1,),
    twl=60,
) -> SensorProfile:
    return SensorProfile(
        sensor_id=sensor_id,
        detection_level=DetectionLevel.NETWORK,
        features=tuple(features),
        nsfs=tuple(nsfs),
        sfs=tuple(sfs),
        sf_thresholds=tuple(thresholds),
        twl_seconds=twl,
    )


def make_event(event_id, sensor_id="S", ts=0, event_type="T", merge_count=1,
               features=None, **more):
    merged = dict(features or {})
    merged.update(more)
    return NormalizedEvent(
        event_id=event_id,
        sensor_id=sensor_id,
        timestamp=ts,
        event_type=event_type,
        features=merged,
        merge_count=merge_count,
    )


def make_config(profiles, trees=None, atw=3600, alpha=0.9, beta=5.0,
                gamma=1.5, delta=0.5, filter_mode="ldcof") -> PipelineConfig:
    return PipelineConfig(
        atw_seconds=atw,
        alpha=alpha,
        beta=beta,
        gamma_ldcof=gamma,
        delta_discard=delta,
        sensors=tuple(profiles),
        concept_trees=dict(trees or {}),
        filter_mode=filter_mode,
    )


# ---------------------------------------------------------------------------
# Oracle: literal forward-scan clustering
# ---------------------------------------------------------------------------

def brute_force_clusters(events, config):
    """Transliteration of the forward-scan loop, O(n^2) per type array.

    Per sensor: sort by (timestamp, event_id), split into per-event-type
    arrays in first-seen order, then scan: each unconsumed event becomes a
    base and absorbs later unconsumed events that agree on every rule
    feature and lie strictly within the sensor's window of the base; the
    scan stops at the first event at or beyond the window bound.

    Returns a set of (base_event_id, frozenset of member ids) pairs.
    """
    out = set()
    for profile in config.sensors:
        evs = sorted(
            (e for e in events if e.sensor_id == profile.sensor_id),
            key=lambda e: (e.timestamp, e.event_id),
        )
        twl_ms = profile.twl_seconds * 1000
        arrays = {}
        for e in evs:
            arrays.setdefault(e.event_type, []).append(e)
        for arr in arrays.values():
            consumed = [False] * len(arr)
            for base in range(len(arr)):
                if consumed[base]:
                    continue
                members = [arr[base]]
                for cur in range(base + 1, len(arr)):
                    if arr[cur].timestamp - arr[base].timestamp >= twl_ms:
                        break
                    if consumed[cur]:
                        continue
                    similar = all(
                        arr[cur].features.get(f) == arr[base].features.get(f)
                        for f in profile.nsfs
                    )
                    if similar:
                        members.append(arr[cur])
                        consumed[cur] = True
                out.add((arr[base].event_id, frozenset(m.event_id for m in members)))
    return out


def cluster_set(clusters):
    return {(c.base_event_id, frozenset(m.event_id for m in c.members)) for c in clusters}


def random_instance(seed, max_events=100, sensors=2):
    """A randomized aggregation instance with adversarial collision rates."""
    rng = random.Random(seed)
    profiles = []
    for s in range(sensors):
        profiles.append(
            make_profile(
                sensor_id=f"S{s}",
                features=(("A", ValueKind.TEXT), ("B", ValueKind.INTEGER)),
                nsfs=rng.choice([("A",), ("A", "B"), ()]),
                sfs=(),
                thresholds=(),
                twl=rng.choice([1, 5, 30, 7200]),
            )
        )
    config = make_config(profiles, atw=7200)
    n = rng.randint(0, max_events)
    events = []
    for i in range(n):
        sensor = rng.randrange(sensors)
        events.append(
            make_event(
                f"e{i}",
                sensor_id=f"S{sensor}",
                ts=rng.randint(0, 120_000),
                event_type=rng.choice(["t1", "t2", "t3"]),
                A=rng.choice(["x", "y", None]),
                B=rng.choice([1, 2, None]),
            )
        )
    return events, config


# ---------------------------------------------------------------------------
# Oracle: explicit mixed-distance arithmetic
# ---------------------------------------------------------------------------

def oracle_encode(events, config, window_start_ms):
    """Independent tabular encoding: (dims, per-event value rows, ranges).

    Numeric summarizable features keep their float value (None for
    absent); categorical ones keep the rendered value. One synthetic time
    dimension is normalized over the batching window.
    """
    numeric_kinds = (ValueKind.INTEGER, ValueKind.TIMESTAMP)
    order, kind_sets = [], {}
    for p in config.sensors:
        declared = dict(p.features)
        for f in p.sfs:
            if f not in kind_sets:
                kind_sets[f] = set()
                order.append(f)
            kind_sets[f].add(declared[f])
    dims = [(f, "num" if all(k in numeric_kinds for k in kind_sets[f]) else "cat")
            for f in order]
    rows = []
    for e in events:
        row = {}
        for f, kind in dims:
            v = e.features.get(f)
            if kind == "num":
                row[f] = float(v) if isinstance(v, int) and not isinstance(v, bool) else None
            else:
                row[f] = v
        row["__time__"] = (e.timestamp - window_start_ms) / (config.atw_seconds * 1000)
        rows.append(row)
    ranges = {}
    for f, kind in dims:
        if kind != "num":
            continue
        present = [r[f] for r in rows if r[f] is not None]
        ranges[f] = (max(present) - min(present)) if present else 0.0
    ranges["__time__"] = 1.0
    return dims + [("__time__", "num")], rows, ranges


def oracle_centroid(dims, rows, member_rows):
    centroid = {}
    for f, kind in dims:
        values = [rows[i][f] for i in member_rows]
        present = [v for v in values if v is not None]
        if not present:
            centroid[f] = None
        elif kind == "num":
            centroid[f] = sum(present) / len(present)
        else:
            counts = {}
            for v in present:
                counts[v] = counts.get(v, 0) + 1
            top = max(counts.values())
            centroid[f] = min((v for v, c in counts.items() if c == top), key=str)
    return centroid


def oracle_distance(dims, ranges, row, centroid):
    acc = 0.0
    for f, kind in dims:
        a, b = row[f], centroid[f]
        if a is None and b is None:
            continue
        if a is None or b is None:
            acc += 1.0
        elif kind == "num":
            acc += abs(a - b) / ranges[f] if ranges[f] > 0 else 0.0
        elif a != b:
            acc += 1.0
    return acc / len(dims)


def oracle_ldcof(clusters, config, events, window_start_ms, alpha=None, beta=None):
    """Direct evaluation of the outlier-score equations over all events."""
    alpha = config.alpha if alpha is None else alpha
    beta = config.beta if beta is None else beta
    dims, rows, ranges = oracle_encode(events, config, window_start_ms)
    row_of = {e.event_id: i for i, e in enumerate(events)}

    ordered = sorted(clusters, key=lambda c: -len(c.members))
    sizes = [len(c.members) for c in ordered]
    total = sum(sizes)
    b = len(ordered)
    cum = 0
    for i in range(1, len(ordered) + 1):
        cum += sizes[i - 1]
        drop_ok = i == len(ordered) or sizes[i - 1] / sizes[i] >= beta
        if cum >= total * alpha and drop_ok:
            b = i
            break
    lc, sc = ordered[:b], ordered[b:]

    stats = {}
    for c in lc:
        member_rows = [row_of[m.event_id] for m in c.members]
        centroid = oracle_centroid(dims, rows, member_rows)
        dists = [oracle_distance(dims, ranges, rows[i], centroid) for i in member_rows]
        stats[c.cluster_id] = (centroid, sum(dists) / len(dists))

    scores = {}
    for c in lc:
        centroid, avg = stats[c.cluster_id]
        for m in c.members:
            d = oracle_distance(dims, ranges, rows[row_of[m.event_id]], centroid)
            scores[m.event_id] = d / avg if avg > 0 else 0.0
    for c in sc:
        for m in c.members:
            row = rows[row_of[m.event_id]]
            best = None
            for ref in lc:
                centroid, avg = stats[ref.cluster_id]
                d = oracle_distance(dims, ranges, row, centroid)
                if best is None or d < best[0]:
                    best = (d, avg)
            d, avg = best
            scores[m.event_id] = d / avg if avg > 0 else float("inf")
    return {cid: [m.event_id for m in c.members] for cid, c in
            ((c.cluster_id, c) for c in lc)}, scores


def ip(text):
    return ipaddress.ip_address(text)
