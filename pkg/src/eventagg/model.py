"""Core data types shared by every pipeline stage.

All types here are immutable value objects: once constructed they can be
shared freely across threads or worker processes without coordination.

Feature values are plain Python objects tagged by the owning sensor
profile's declared kind:

    text      -> str (non-empty; empty text is represented as absent)
    integer   -> int (signed 64-bit range)
    ipaddr    -> ipaddress.IPv4Address | ipaddress.IPv6Address
    timestamp -> int epoch milliseconds UTC
    absent    -> None

Timestamps are epoch milliseconds UTC throughout so that window arithmetic
is exact integer math.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Sequence

FeatureValue = Any  # str | int | IPv4Address | IPv6Address | None

#: Feature name that mirrors NormalizedEvent.event_type when declared in a
#: sensor profile. Summarization generalizes it like any other feature.
EVENT_TYPE_FEATURE = "Event ID"


class ValueKind(str, Enum):
    """Declared kind of a sensor feature."""

    TEXT = "text"
    INTEGER = "integer"
    IPADDR = "ipaddr"
    TIMESTAMP = "timestamp"


class DetectionLevel(str, Enum):
    """Line of defense a sensor is deployed at."""

    NETWORK = "Network"
    HOST = "Host"
    APPLICATION = "Application"


class LogBase(str, Enum):
    """Logarithm base used by information-content computations."""

    E = "e"
    TWO = "2"
    TEN = "10"


def parse_timestamp_ms(text: str, fmt: str) -> int:
    """Parse a timestamp string as UTC and return epoch milliseconds."""
    dt = datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def format_timestamp_ms(ts_ms: int) -> str:
    """Render epoch milliseconds as ISO-8601 UTC with millisecond precision."""
    dt = datetime.fromtimestamp(ts_ms / 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts_ms % 1000:03d}Z"


def coerce_value(raw: str, kind: ValueKind) -> FeatureValue:
    """Convert a raw string to the declared kind.

    Empty strings become absent (None). Raises ValueError when the string
    cannot be represented in the declared kind.
    """
    if raw == "":
        return None
    if kind is ValueKind.TEXT:
        return raw
    if kind is ValueKind.INTEGER:
        return int(raw)
    if kind is ValueKind.IPADDR:
        return ipaddress.ip_address(raw)
    if kind is ValueKind.TIMESTAMP:
        return parse_timestamp_ms(raw, "%Y-%m-%dT%H:%M:%S.%fZ")
    raise ValueError(f"unknown value kind {kind!r}")


def render_value(value: FeatureValue) -> str:
    """Render a feature value to its canonical text form (absent -> '')."""
    if value is None:
        return ""
    if isinstance(value, (ipaddress.IPv4Address, ipaddress.IPv6Address)):
        return str(value)
    return str(value)


@dataclass(frozen=True, slots=True)
class NormalizedEvent:
    """One normalized log record in the common log format.

    Attributes:
        event_id: Unique identifier within a run.
        sensor_id: Identifier of the producing sensor.
        timestamp: Epoch milliseconds UTC.
        event_type: The event type / event id symbol used for clustering.
        features: Ordered feature-name -> value map; names must belong to
            the owning sensor profile's declared feature list.
        merge_count: Number of raw events this record stands for (1 for
            freshly ingested events).
    """

    event_id: str
    sensor_id: str
    timestamp: int
    event_type: str
    features: dict[str, FeatureValue]
    merge_count: int = 1


@dataclass(frozen=True, slots=True)
class SensorProfile:
    """Per-sensor configuration driving every pipeline stage.

    Attributes:
        sensor_id: Unique sensor identifier.
        detection_level: Network, Host, or Application.
        features: Declared feature names in order, with their value kinds.
        nsfs: Non-summarizable features; exact equality on these is what
            clusters events.
        sfs: Summarizable features in processing order; generalized against
            concept trees during summarization.
        sf_thresholds: Distinct-value thresholds, aligned with ``sfs``.
        twl_seconds: Maximum gap between a cluster's base event and any
            member, in seconds.
        pattern: Extraction pattern id used at ingest.
    """

    sensor_id: str
    detection_level: DetectionLevel
    features: tuple[tuple[str, ValueKind], ...]
    nsfs: tuple[str, ...]
    sfs: tuple[str, ...]
    sf_thresholds: tuple[int, ...]
    twl_seconds: int
    pattern: str = ""

    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.features)

    def kind_of(self, feature: str) -> ValueKind:
        for name, kind in self.features:
            if name == feature:
                return kind
        raise KeyError(feature)

    def threshold_of(self, feature: str) -> int:
        return self.sf_thresholds[self.sfs.index(feature)]

    def check(self) -> None:
        """Raise ValueError when the profile violates its own invariants."""
        names = self.feature_names()
        if len(set(names)) != len(names):
            raise ValueError(f"{self.sensor_id}: duplicate feature names")
        declared = set(names)
        if set(self.nsfs) & set(self.sfs):
            raise ValueError(f"{self.sensor_id}: nsfs and sfs overlap")
        for f in (*self.nsfs, *self.sfs):
            if f not in declared:
                raise ValueError(f"{self.sensor_id}: {f!r} not a declared feature")
        if len(self.sf_thresholds) != len(self.sfs):
            raise ValueError(f"{self.sensor_id}: threshold vector length != |sfs|")
        if any(t < 1 for t in self.sf_thresholds):
            raise ValueError(f"{self.sensor_id}: thresholds must be >= 1")
        if self.twl_seconds < 1:
            raise ValueError(f"{self.sensor_id}: twl_seconds must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    """Full pipeline configuration.

    ``concept_trees`` maps feature names to loaded trees; every summarizable
    feature of every sensor must have an entry. ``atw_seconds`` must be at
    least the largest sensor window so one batching window always fits the
    largest per-sensor window.
    """

    atw_seconds: int
    alpha: float
    beta: float
    gamma_ldcof: float
    delta_discard: float
    sensors: tuple[SensorProfile, ...]
    concept_trees: dict[str, Any]  # feature name -> ConceptTree
    log_base: LogBase = LogBase.E
    filter_mode: str = "ldcof"  # "ldcof" or "strict-sc"

    def profile(self, sensor_id: str) -> SensorProfile:
        for p in self.sensors:
            if p.sensor_id == sensor_id:
                return p
        raise KeyError(sensor_id)

    def check(self) -> None:
        """Raise ValueError when the configuration is inconsistent."""
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.gamma_ldcof <= 0:
            raise ValueError("gamma_ldcof must be positive")
        if not 0 < self.delta_discard <= 1:
            raise ValueError("delta_discard must lie in (0, 1]")
        if self.filter_mode not in ("ldcof", "strict-sc"):
            raise ValueError(f"unknown filter mode {self.filter_mode!r}")
        ids = [p.sensor_id for p in self.sensors]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sensor ids")
        for p in self.sensors:
            p.check()
            for f in p.sfs:
                if f not in self.concept_trees:
                    raise ValueError(
                        f"{p.sensor_id}: summarizable feature {f!r} has no concept tree"
                    )
        if self.sensors and self.atw_seconds < max(p.twl_seconds for p in self.sensors):
            raise ValueError("atw_seconds must cover the largest sensor window")


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of validating an event against its sensor profile."""

    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


_KIND_TYPES = {
    ValueKind.TEXT: str,
    ValueKind.INTEGER: int,
    ValueKind.IPADDR: (ipaddress.IPv4Address, ipaddress.IPv6Address),
    ValueKind.TIMESTAMP: int,
}

_INT64_MIN, _INT64_MAX = -(2**63), 2**63 - 1


def validate_event(event: NormalizedEvent, profile: SensorProfile) -> ValidationResult:
    """Check an event against its profile; violations are data, not errors."""
    if event.sensor_id != profile.sensor_id:
        raise ValueError(
            f"profile {profile.sensor_id!r} cannot validate event of {event.sensor_id!r}"
        )
    violations: list[str] = []
    if not event.event_id:
        violations.append("event_id: must be non-empty")
    if not isinstance(event.timestamp, int):
        violations.append("timestamp: must be epoch milliseconds")
    if event.merge_count < 1:
        violations.append("merge_count: must be >= 1")
    declared = dict(profile.features)
    for name, value in event.features.items():
        if name not in declared:
            violations.append(f"unknown feature {name}")
            continue
        if value is None:
            continue
        if value == "":
            violations.append(f"{name}: empty text is not a value, use absent")
            continue
        expected = _KIND_TYPES[declared[name]]
        if not isinstance(value, expected) or isinstance(value, bool):
            violations.append(f"{name}: value {value!r} does not match kind "
                              f"{declared[name].value}")
            continue
        if declared[name] in (ValueKind.INTEGER, ValueKind.TIMESTAMP):
            if not _INT64_MIN <= value <= _INT64_MAX:
                violations.append(f"{name}: integer out of 64-bit range")
    return ValidationResult(tuple(violations))


def chronological_sort(events: Iterable[NormalizedEvent]) -> list[NormalizedEvent]:
    """Sort events by (timestamp, event_id); a stable total order."""
    return sorted(events, key=lambda e: (e.timestamp, e.event_id))


def sort_key(event: NormalizedEvent) -> tuple[int, str]:
    return (event.timestamp, event.event_id)


def group_by_sensor(
    events: Sequence[NormalizedEvent], sensor_order: Sequence[str]
) -> dict[str, list[NormalizedEvent]]:
    """Partition events by sensor id, each group chronologically sorted.

    Groups appear in ``sensor_order``; sensors absent from the order are
    appended afterwards in first-seen order.
    """
    groups: dict[str, list[NormalizedEvent]] = {}
    for sid in sensor_order:
        groups[sid] = []
    for e in events:
        groups.setdefault(e.sensor_id, []).append(e)
    empty = [sid for sid, g in groups.items() if not g]
    for sid in empty:
        del groups[sid]
    for g in groups.values():
        g.sort(key=sort_key)
    return groups
