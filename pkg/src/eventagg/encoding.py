"""Numeric encoding of one window's events for distance computations.

The encoded space spans the union of all sensors' summarizable features
(declared order, first occurrence wins) plus one synthetic time dimension;
features that cluster events are excluded because they are constant inside
a cluster and would make intra-cluster distances degenerate.

Integer and timestamp features become float columns with NaN for absent;
text and address features become integer code columns with -1 for absent.
Numeric ranges are observed over the window, so mixed distances stay in
[0, 1] per dimension, and event times are normalized to [0, 1] over the
batching window. Distances are ratios of these encodings, which makes
every downstream outlier score invariant under a uniform rescaling of the
raw feature space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .model import NormalizedEvent, PipelineConfig, ValueKind, render_value

_NUMERIC_KINDS = (ValueKind.INTEGER, ValueKind.TIMESTAMP)

TIME_DIM = "__time__"


@dataclass
class WindowEncoding:
    """Column-encoded events of one batching window."""

    num_features: list[str]  # numeric feature names + TIME_DIM last
    cat_features: list[str]
    num: np.ndarray  # (n, len(num_features)) float64, NaN = absent
    cats: np.ndarray  # (n, len(cat_features)) int64, -1 = absent
    ranges: np.ndarray  # per numeric column, 0 when degenerate
    mins: np.ndarray  # per numeric column, 0 when the column is all-absent
    cat_values: list[list]  # per categorical column, code -> original value
    row_of: dict[str, int]  # event_id -> row index

    @property
    def n_dims(self) -> int:
        return len(self.num_features) + len(self.cat_features)

    def rows(self, events: Sequence[NormalizedEvent]) -> np.ndarray:
        return np.fromiter((self.row_of[e.event_id] for e in events),
                           dtype=np.int64, count=len(events))

    def centroid(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mean of present numerics, mode of categoricals (lexicographic ties).

        A dimension where every member is absent stays absent in the
        centroid.
        """
        num = self.num[rows]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)
            cnum = np.nanmean(num, axis=0) if num.size else np.empty(0)
        ccat = np.empty(len(self.cat_features), dtype=np.int64)
        for j in range(len(self.cat_features)):
            col = self.cats[rows, j]
            present = col[col >= 0]
            if present.size == 0:
                ccat[j] = -1
                continue
            codes, counts = np.unique(present, return_counts=True)
            best = codes[counts == counts.max()]
            if best.size == 1:
                ccat[j] = best[0]
            else:
                values = self.cat_values[j]
                ccat[j] = min(best, key=lambda c: render_value(values[c]))
        return cnum, ccat

    def distances_to(self, rows: np.ndarray, cnum: np.ndarray, ccat: np.ndarray) -> np.ndarray:
        """Mixed distance of the given rows to one centroid."""
        return _kernels.gower_to_centroid(
            self.num[rows], self.ranges, self.cats[rows], cnum, ccat
        )

    def euclidean_points(self, rows: np.ndarray) -> np.ndarray:
        """Embed rows into a plain Euclidean space for cluster-quality indexes.

        Numerics are range-normalized with -1.0 standing in for absent;
        categoricals become one-hot blocks scaled by 1/sqrt(2) so a
        mismatch contributes unit distance, with absent as the zero block.
        """
        blocks = []
        if self.num_features:
            num = self.num[rows]
            with np.errstate(invalid="ignore"):
                scaled = np.where(self.ranges > 0,
                                  (num - self.mins) / np.where(self.ranges > 0, self.ranges, 1.0),
                                  0.0)
            blocks.append(np.where(np.isnan(num), -1.0, scaled))
        for j, values in enumerate(self.cat_values):
            col = self.cats[rows, j]
            onehot = np.zeros((len(rows), len(values)))
            present = col >= 0
            onehot[np.nonzero(present)[0], col[present]] = 1.0 / np.sqrt(2.0)
            blocks.append(onehot)
        if not blocks:
            return np.zeros((len(rows), 0))
        return np.hstack(blocks)


def summarizable_dims(config: PipelineConfig) -> tuple[list[str], list[str]]:
    """Union of summarizable features split into numeric and categorical.

    A name declared with conflicting kinds on different sensors is treated
    as categorical.
    """
    order: list[str] = []
    kinds: dict[str, set[ValueKind]] = {}
    for profile in config.sensors:
        declared = dict(profile.features)
        for f in profile.sfs:
            if f not in kinds:
                kinds[f] = set()
                order.append(f)
            kinds[f].add(declared[f])
    numeric, categorical = [], []
    for f in order:
        if all(k in _NUMERIC_KINDS for k in kinds[f]):
            numeric.append(f)
        else:
            categorical.append(f)
    return numeric, categorical


def encode_window(
    events: Sequence[NormalizedEvent],
    config: PipelineConfig,
    window_start_ms: int,
) -> WindowEncoding:
    """Encode all events of one batching window."""
    numeric, categorical = summarizable_dims(config)
    n = len(events)
    num = np.full((n, len(numeric) + 1), np.nan)
    span_ms = float(config.atw_seconds * 1000)
    for i, e in enumerate(events):
        num[i, -1] = (e.timestamp - window_start_ms) / span_ms
    for j, name in enumerate(numeric):
        col = num[:, j]
        for i, e in enumerate(events):
            v = e.features.get(name)
            if isinstance(v, int) and not isinstance(v, bool):
                col[i] = float(v)
    cats = np.full((n, len(categorical)), -1, dtype=np.int64)
    cat_values: list[list] = []
    for j, name in enumerate(categorical):
        codes: dict = {}
        values: list = []
        col = cats[:, j]
        for i, e in enumerate(events):
            v = e.features.get(name)
            if v is None:
                continue
            code = codes.get(v)
            if code is None:
                code = codes[v] = len(values)
                values.append(v)
            col[i] = code
        cat_values.append(values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        lo = np.nanmin(num, axis=0) if n else np.zeros(num.shape[1])
        hi = np.nanmax(num, axis=0) if n else np.zeros(num.shape[1])
    ranges = np.nan_to_num(hi - lo, nan=0.0)
    mins = np.nan_to_num(lo, nan=0.0)
    ranges[-1] = 1.0  # time is already normalized to the window
    mins[-1] = 0.0
    return WindowEncoding(
        num_features=[*numeric, TIME_DIM],
        cat_features=categorical,
        num=num,
        cats=cats,
        ranges=ranges,
        mins=mins,
        cat_values=cat_values,
        row_of={e.event_id: i for i, e in enumerate(events)},
    )
