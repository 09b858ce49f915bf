"""Raw log line to normalized event conversion, and the common CSV format.

Each sensor ships one anchored regular expression with named capture
groups. The pattern's ``field_map`` sends capture-group names either to a
declared feature of the sensor profile or to one of the two reserved
targets ``timestamp`` and ``event_type`` (every pattern must capture
both). Uncaptured profile features are absent on the resulting event.

A profile feature named "Event ID" mirrors the event type automatically
unless a capture maps to it explicitly.

Normalized events are persisted one CSV file per sensor with a fixed
column prefix followed by the profile's features in declared order:

    event_id,sensor_id,timestamp,event_type,<features...>,merge_count

Absent values are empty fields; timestamps are ISO-8601 UTC with
millisecond precision. Parsing is stateless per line, so input files may
be processed concurrently as long as per-file output order is preserved.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import (
    EVENT_TYPE_FEATURE,
    FeatureValue,
    NormalizedEvent,
    SensorProfile,
    ValueKind,
    coerce_value,
    format_timestamp_ms,
    parse_timestamp_ms,
    render_value,
)

RESERVED_TARGETS = ("timestamp", "event_type")


class MalformedTimestamp(ValueError):
    """A line matched its pattern but the captured time is not a real time."""


class TypeMismatch(ValueError):
    """A captured value cannot be converted to the feature's declared kind."""


class HeaderMismatch(ValueError):
    """A CSV header does not match the expected column layout."""


class IoFailure(OSError):
    """Reading or writing an artifact failed at the OS level."""


@dataclass(frozen=True)
class ExtractionPattern:
    """Per-sensor line extraction rule.

    Attributes:
        pattern_id: Unique pattern identifier.
        sensor_id: Sensor whose profile types the captured fields.
        regex: Anchored expression with named capture groups.
        field_map: Capture-group name -> feature name or reserved target.
        timestamp_format: strftime template for the timestamp capture.
        template: Optional inverse format used to render synthetic events
            back into raw lines; ``{name}`` placeholders name features or
            the reserved targets.
    """

    pattern_id: str
    sensor_id: str
    regex: str
    field_map: dict[str, str]
    timestamp_format: str
    template: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_compiled", re.compile(self.regex))

    def check(self, profile: SensorProfile) -> None:
        targets = set(self.field_map.values())
        for reserved in RESERVED_TARGETS:
            if reserved not in targets:
                raise ValueError(f"{self.pattern_id}: no capture maps to {reserved!r}")
        declared = set(profile.feature_names())
        for group, target in self.field_map.items():
            if group not in self._compiled.groupindex:
                raise ValueError(f"{self.pattern_id}: no capture group {group!r}")
            if target not in RESERVED_TARGETS and target not in declared:
                raise ValueError(
                    f"{self.pattern_id}: {target!r} is not a feature of {profile.sensor_id}"
                )


def parse_line(
    line: str,
    pattern: ExtractionPattern,
    profile: SensorProfile,
    sequence: int = 1,
) -> NormalizedEvent | None:
    """Parse one raw line; None when the pattern does not match.

    Raises MalformedTimestamp or TypeMismatch when the line matches but a
    captured field cannot be converted.
    """
    m = pattern._compiled.match(line)
    if m is None:
        return None
    timestamp = None
    event_type = None
    features: dict[str, FeatureValue] = {name: None for name in profile.feature_names()}
    kinds = dict(profile.features)
    for group, target in pattern.field_map.items():
        raw = m.group(group)
        if raw is None:
            continue
        if target == "timestamp":
            try:
                timestamp = parse_timestamp_ms(raw, pattern.timestamp_format)
            except ValueError as exc:
                raise MalformedTimestamp(f"{raw!r}: {exc}") from None
        elif target == "event_type":
            event_type = raw
        else:
            try:
                features[target] = coerce_value(raw, kinds[target])
            except ValueError as exc:
                raise TypeMismatch(f"{target}={raw!r}: {exc}") from None
    if timestamp is None:
        raise MalformedTimestamp("timestamp capture is empty")
    if event_type is None:
        raise TypeMismatch("event_type capture is empty")
    if EVENT_TYPE_FEATURE in features and features[EVENT_TYPE_FEATURE] is None:
        features[EVENT_TYPE_FEATURE] = event_type
    return NormalizedEvent(
        event_id=f"{profile.sensor_id}-{sequence}",
        sensor_id=profile.sensor_id,
        timestamp=timestamp,
        event_type=event_type,
        features=features,
    )


@dataclass
class RejectReport:
    """Lines that matched no pattern or failed conversion."""

    count: int = 0
    samples: list[str] = field(default_factory=list)

    def add(self, line: str) -> None:
        self.count += 1
        if len(self.samples) < 100:
            self.samples.append(line)


def normalize_stream(
    lines: Iterable[str],
    patterns: Sequence[ExtractionPattern],
    profiles: dict[str, SensorProfile],
) -> tuple[list[NormalizedEvent], RejectReport]:
    """Convert raw lines to events; the first pattern whose regex matches wins.

    A matching line that fails field conversion counts as a reject rather
    than aborting the run. Accepted events keep input order; per-sensor
    sequence numbers make the synthesized event ids unique.
    """
    events: list[NormalizedEvent] = []
    rejects = RejectReport()
    sequences: dict[str, int] = {}
    for raw in lines:
        line = raw.rstrip("\r\n")
        matched = False
        for pattern in patterns:
            if pattern._compiled.match(line) is None:
                continue
            matched = True
            profile = profiles[pattern.sensor_id]
            seq = sequences.get(pattern.sensor_id, 0) + 1
            try:
                event = parse_line(line, pattern, profile, seq)
            except (MalformedTimestamp, TypeMismatch):
                rejects.add(line)
                break
            sequences[pattern.sensor_id] = seq
            events.append(event)
            break
        if not matched:
            rejects.add(line)
    return events, rejects


def _header(profile: SensorProfile) -> list[str]:
    return ["event_id", "sensor_id", "timestamp", "event_type",
            *profile.feature_names(), "merge_count"]


def write_olf_csv(events: Sequence[NormalizedEvent], path, profile: SensorProfile) -> None:
    """Write events of one sensor to a CSV file in the common layout."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_header(profile))
            for e in events:
                writer.writerow(_event_row(e, profile))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _event_row(e: NormalizedEvent, profile: SensorProfile) -> list[str]:
    row = [e.event_id, e.sensor_id, format_timestamp_ms(e.timestamp), e.event_type]
    kinds = dict(profile.features)
    for name in profile.feature_names():
        value = e.features.get(name)
        if value is not None and kinds[name] is ValueKind.TIMESTAMP and isinstance(value, int):
            row.append(format_timestamp_ms(value))
        else:
            row.append(render_value(value))
    row.append(str(e.merge_count))
    return row


def aggregated_csv_text(events: Sequence, profile: SensorProfile) -> str:
    """Render aggregated events of one sensor as CSV text.

    Same columns as the raw layout plus provenance (semicolon-joined
    constituent ids) and the first/last constituent timestamps.
    Generalized features serialize as their concept labels.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*_header(profile), "provenance", "first_ts", "last_ts"])
    for e in events:
        writer.writerow([
            *_event_row(e, profile),
            ";".join(e.provenance),
            format_timestamp_ms(e.first_ts),
            format_timestamp_ms(e.last_ts),
        ])
    return buffer.getvalue()


def write_aggregated_csv(events: Sequence, path, profile: SensorProfile) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(aggregated_csv_text(events, profile))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_olf_csv(path, profile: SensorProfile) -> list[NormalizedEvent]:
    """Read one sensor's CSV file back into normalized events."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise HeaderMismatch(f"{path}: empty file") from None
            if header != _header(profile):
                raise HeaderMismatch(f"{path}: header does not match {profile.sensor_id}")
            names = profile.feature_names()
            out = []
            for row in reader:
                features = {
                    name: coerce_value(raw, profile.kind_of(name))
                    for name, raw in zip(names, row[4:-1])
                }
                out.append(
                    NormalizedEvent(
                        event_id=row[0],
                        sensor_id=row[1],
                        timestamp=parse_timestamp_ms(row[2], "%Y-%m-%dT%H:%M:%S.%fZ"),
                        event_type=row[3],
                        features=features,
                        merge_count=int(row[-1]),
                    )
                )
            return out
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
