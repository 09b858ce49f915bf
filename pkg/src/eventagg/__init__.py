"""Heterogeneous security event aggregation.

Three pipeline phases over normalized multi-sensor logs: attribute-
equality clustering inside per-sensor time windows, density-based noise
filtration of the resulting clusters, and concept-tree summarization of
the survivors, with reduction/throughput/information-loss metrics and
cluster validity indexes.
"""

from .aggregation import (
    AggregationRule,
    ConfigMissingSensor,
    EventCluster,
    aggregate_window,
    check_similarity,
    classify_by_sensor,
    rules_for_profile,
)
from .concept import ConceptTree, NoMatchingLeaf, UnknownConcept, load_tree, parse_outline
from .config import ConfigError, load_config
from .filtration import (
    ClusterPartition,
    DroppedEvent,
    EmptyInput,
    LdcofScore,
    NoLargeCluster,
    cluster_centroid,
    filter_outliers,
    ldcof_score,
    partition_lc_sc,
    score_partition,
)
from .ingest import (
    ExtractionPattern,
    HeaderMismatch,
    IoFailure,
    MalformedTimestamp,
    RejectReport,
    TypeMismatch,
    normalize_stream,
    parse_line,
    read_olf_csv,
    write_olf_csv,
)
from .metrics import (
    RunMetrics,
    ZeroInformation,
    apc_sweep,
    davies_bouldin,
    dunn_index,
    ear,
    epr,
    ilr,
    ilr_from_ic,
    run_ilr,
)
from .model import (
    DetectionLevel,
    LogBase,
    NormalizedEvent,
    PipelineConfig,
    SensorProfile,
    ValidationResult,
    ValueKind,
    chronological_sort,
    validate_event,
)
from .pipeline import PipelineResult, run_events, with_thresholds, with_twl
from .scenario import ScenarioSpec, StageSpec, UnknownSensor, generate, load_scenario, scale
from .summarization import (
    AggregatedEvent,
    distinct_value_count,
    generalize_feature,
    summarize_all,
    summarize_cluster,
)

__version__ = "0.1.0"
