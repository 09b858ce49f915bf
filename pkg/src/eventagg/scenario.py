"""Deterministic synthetic event streams for fixtures and benchmarks.

A scenario is an ordered list of attack-stage entries (seven-stage kill
chain vocabulary: REC, DEL, INS, ESC, LAT, ACT, EXF) plus optional benign
background rates per sensor. Randomness comes exclusively from one
Mersenne Twister instance (``random.Random(seed)``, the documented
standard-library generator) consumed in a fixed order, so a seed pins the
stream byte for byte across runs and platforms.

Event timing per entry is one of:
    fixed        -- {kind: fixed, seconds: S}: arrivals every S seconds
    exponential  -- {kind: exponential, mean_seconds: M}: memoryless gaps
    explicit     -- {kind: explicit, offsets_seconds: [..]}: verbatim

Feature values per entry combine three layers, later ones winning:
``features`` (constants), ``feature_cycles`` (lists cycled by event
index), and ``feature_random`` ({kind: randint, lo, hi} or
{kind: choice, values}). Every generated event is validated against its
sensor profile. Event ids ``e1..eN`` are assigned in chronological order
after generation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Sequence

import yaml

from .model import (
    EVENT_TYPE_FEATURE,
    FeatureValue,
    NormalizedEvent,
    SensorProfile,
    ValueKind,
    coerce_value,
    parse_timestamp_ms,
    validate_event,
)

KILL_CHAIN_STAGES = ("REC", "DEL", "INS", "ESC", "LAT", "ACT", "EXF")

DEFAULT_START = "2005-02-25T10:00:00.000Z"


class UnknownSensor(KeyError):
    """A scenario references a sensor with no profile."""


@dataclass(frozen=True)
class StageSpec:
    """One burst of same-type events attributed to a kill-chain stage."""

    stage: str
    sensor_id: str
    event_type: str
    count: int
    start_offset_seconds: float = 0.0
    interarrival: dict = field(default_factory=lambda: {"kind": "fixed", "seconds": 1})
    features: dict[str, FeatureValue] = field(default_factory=dict)
    feature_cycles: dict[str, list] = field(default_factory=dict)
    feature_random: dict[str, dict] = field(default_factory=dict)

    def check(self) -> None:
        if self.stage not in KILL_CHAIN_STAGES:
            raise ValueError(f"unknown kill-chain stage {self.stage!r}")
        if self.count < 0:
            raise ValueError("count must be >= 0")
        kind = self.interarrival.get("kind")
        if kind not in ("fixed", "exponential", "explicit"):
            raise ValueError(f"unknown inter-arrival kind {kind!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """A reproducible synthetic stream description."""

    seed: int
    stages: tuple[StageSpec, ...]
    background: dict[str, dict] = field(default_factory=dict)
    duplication_factor: float = 1.0
    duration_seconds: float = 0.0
    start_time: str = DEFAULT_START

    def check(self) -> None:
        if self.duplication_factor < 1:
            raise ValueError("duplication_factor must be >= 1")
        for stage in self.stages:
            stage.check()


def load_scenario(path) -> ScenarioSpec:
    """Load a scenario spec from its YAML file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    stages = tuple(StageSpec(**entry) for entry in doc.get("stages", []))
    spec = ScenarioSpec(
        seed=int(doc.get("seed", 0)),
        stages=stages,
        background=doc.get("background", {}) or {},
        duplication_factor=float(doc.get("duplication_factor", 1.0)),
        duration_seconds=float(doc.get("duration_seconds", 0.0)),
        start_time=doc.get("start_time", DEFAULT_START),
    )
    spec.check()
    return spec


def scale(spec: ScenarioSpec, factor: int) -> ScenarioSpec:
    """Multiply the stream volume by replicating every event ``factor`` times.

    Replication leaves the timing parameters untouched, so explicit-offset
    fixtures scale without changing their timeline.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return replace(spec, duplication_factor=spec.duplication_factor * factor)


def _offsets(stage: StageSpec, rng: random.Random) -> list[float]:
    kind = stage.interarrival["kind"]
    if kind == "explicit":
        offsets = [float(o) for o in stage.interarrival["offsets_seconds"]]
        if len(offsets) != stage.count:
            raise ValueError(
                f"stage {stage.stage}/{stage.event_type}: "
                f"{stage.count} events but {len(offsets)} offsets"
            )
        return [stage.start_offset_seconds + o for o in offsets]
    if kind == "fixed":
        step = float(stage.interarrival["seconds"])
        return [stage.start_offset_seconds + i * step for i in range(stage.count)]
    mean = float(stage.interarrival["mean_seconds"])
    at = stage.start_offset_seconds
    out = []
    for _ in range(stage.count):
        out.append(at)
        at += rng.expovariate(1.0 / mean)
    return out


def _draw(spec: dict, rng: random.Random) -> FeatureValue:
    kind = spec.get("kind")
    if kind == "randint":
        return rng.randint(int(spec["lo"]), int(spec["hi"]))
    if kind == "choice":
        return rng.choice(list(spec["values"]))
    raise ValueError(f"unknown feature_random kind {kind!r}")


def _typed(value: FeatureValue, kind: ValueKind) -> FeatureValue:
    if value is None or (isinstance(value, int) and not isinstance(value, bool)):
        if kind is ValueKind.TEXT and value is not None:
            return str(value)
        return value
    return coerce_value(str(value), kind)


def _stage_events(
    stage: StageSpec,
    profile: SensorProfile,
    base_ms: int,
    rng: random.Random,
) -> list[tuple[int, str, dict]]:
    kinds = dict(profile.features)
    for name in (*stage.features, *stage.feature_cycles, *stage.feature_random):
        if name not in kinds:
            raise ValueError(f"{profile.sensor_id} has no feature {name!r}")
    out = []
    for i, offset in enumerate(_offsets(stage, rng)):
        features: dict[str, FeatureValue] = {name: None for name in kinds}
        for name, value in stage.features.items():
            features[name] = _typed(value, kinds[name])
        for name, cycle in stage.feature_cycles.items():
            features[name] = _typed(cycle[i % len(cycle)], kinds[name])
        for name, drawn in stage.feature_random.items():
            features[name] = _typed(_draw(drawn, rng), kinds[name])
        if EVENT_TYPE_FEATURE in features and features[EVENT_TYPE_FEATURE] is None:
            features[EVENT_TYPE_FEATURE] = stage.event_type
        out.append((base_ms + round(offset * 1000), stage.event_type, features))
    return out


def generate(
    spec: ScenarioSpec, profiles: Sequence[SensorProfile]
) -> list[NormalizedEvent]:
    """Produce the scenario's event stream, ids in chronological order."""
    spec.check()
    by_id = {p.sensor_id: p for p in profiles}
    rng = random.Random(spec.seed)
    base_ms = parse_timestamp_ms(spec.start_time, "%Y-%m-%dT%H:%M:%S.%fZ")

    raw: list[tuple[int, int, str, str, dict]] = []  # (ts, order, sensor, type, features)
    order = 0
    for stage in spec.stages:
        profile = by_id.get(stage.sensor_id)
        if profile is None:
            raise UnknownSensor(stage.sensor_id)
        for ts, event_type, features in _stage_events(stage, profile, base_ms, rng):
            raw.append((ts, order, stage.sensor_id, event_type, features))
            order += 1
    for sensor_id in sorted(spec.background):
        entry = spec.background[sensor_id]
        profile = by_id.get(sensor_id)
        if profile is None:
            raise UnknownSensor(sensor_id)
        rate = float(entry.get("rate_per_second", 0.0))
        if rate <= 0 or spec.duration_seconds <= 0:
            continue
        stage = StageSpec(
            stage=entry.get("stage", "REC"),
            sensor_id=sensor_id,
            event_type=entry["event_type"],
            count=0,
            features=entry.get("features", {}),
            feature_random=entry.get("feature_random", {}),
        )
        kinds = dict(profile.features)
        at = rng.expovariate(rate)
        while at < spec.duration_seconds:
            features: dict[str, FeatureValue] = {name: None for name in kinds}
            for name, value in stage.features.items():
                features[name] = _typed(value, kinds[name])
            for name, drawn in stage.feature_random.items():
                features[name] = _typed(_draw(drawn, rng), kinds[name])
            if EVENT_TYPE_FEATURE in features and features[EVENT_TYPE_FEATURE] is None:
                features[EVENT_TYPE_FEATURE] = stage.event_type
            raw.append((base_ms + round(at * 1000), order, sensor_id,
                        stage.event_type, features))
            order += 1
            at += rng.expovariate(rate)

    copies = int(spec.duplication_factor)
    extra = spec.duplication_factor - copies
    replicated: list[tuple[int, int, str, str, dict]] = []
    for entry in raw:
        n = copies + (1 if extra > 0 and rng.random() < extra else 0)
        replicated.extend([entry] * n)

    replicated.sort(key=lambda r: (r[0], r[1]))
    events = []
    for i, (ts, _, sensor_id, event_type, features) in enumerate(replicated, start=1):
        event = NormalizedEvent(
            event_id=f"e{i}",
            sensor_id=sensor_id,
            timestamp=ts,
            event_type=event_type,
            features=dict(features),
        )
        check = validate_event(event, by_id[sensor_id])
        if not check.ok:
            raise ValueError(f"generated event violates its profile: {check.violations}")
        events.append(event)
    return events
