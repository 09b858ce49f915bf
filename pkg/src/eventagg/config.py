"""Pipeline configuration loading.

One YAML file describes everything a run needs: global parameters, the
sensor profiles with their feature declarations and rule/summarization
sets, the extraction patterns, and the concept-tree outline files (paths
resolved relative to the configuration file). See ``data/fig7.yaml`` for
a complete example.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .concept import load_tree
from .ingest import ExtractionPattern
from .model import DetectionLevel, LogBase, PipelineConfig, SensorProfile, ValueKind


class ConfigError(Exception):
    """The configuration file is missing, malformed, or inconsistent."""


def _profile(doc: dict) -> SensorProfile:
    features = tuple(
        (entry["name"], ValueKind(entry["kind"])) for entry in doc.get("features", [])
    )
    return SensorProfile(
        sensor_id=doc["sensor_id"],
        detection_level=DetectionLevel(doc.get("detection_level", "Network")),
        features=features,
        nsfs=tuple(doc.get("nsfs", [])),
        sfs=tuple(doc.get("sfs", [])),
        sf_thresholds=tuple(int(t) for t in doc.get("sf_thresholds", [])),
        twl_seconds=int(doc.get("twl_seconds", 60)),
        pattern=doc.get("pattern", ""),
    )


def _pattern(doc: dict) -> ExtractionPattern:
    return ExtractionPattern(
        pattern_id=doc["pattern_id"],
        sensor_id=doc["sensor_id"],
        regex=doc["regex"],
        field_map=dict(doc.get("field_map", {})),
        timestamp_format=doc.get("timestamp_format", "%Y-%m-%dT%H:%M:%S.%f"),
        template=doc.get("template", ""),
    )


def load_config(path) -> tuple[PipelineConfig, list[ExtractionPattern]]:
    """Load and validate a pipeline configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc

    try:
        sensors = tuple(_profile(entry) for entry in doc.get("sensors", []))
        patterns = [_pattern(entry) for entry in doc.get("patterns", [])]
        trees = {}
        for feature, tree_path in (doc.get("trees") or {}).items():
            resolved = (path.parent / tree_path).resolve()
            trees[feature] = load_tree(resolved)
        config = PipelineConfig(
            atw_seconds=int(doc.get("atw_seconds", 3600)),
            alpha=float(doc.get("alpha", 0.9)),
            beta=float(doc.get("beta", 5.0)),
            gamma_ldcof=float(doc.get("gamma_ldcof", 1.5)),
            delta_discard=float(doc.get("delta_discard", 0.5)),
            sensors=sensors,
            concept_trees=trees,
            log_base=LogBase(str(doc.get("log_base", "e"))),
            filter_mode=doc.get("filter_mode", "ldcof"),
        )
        config.check()
        profiles = {p.sensor_id: p for p in sensors}
        for pattern in patterns:
            if pattern.sensor_id not in profiles:
                raise ValueError(f"pattern {pattern.pattern_id}: unknown sensor "
                                 f"{pattern.sensor_id}")
            pattern.check(profiles[pattern.sensor_id])
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config, patterns
