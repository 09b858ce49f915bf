"""Hot numeric kernels, JIT-compiled when numba is available.

Each kernel has a pure-numpy implementation (the ``*_np`` functions) that
is always importable; the public names point at numba-compiled versions
unless numba is missing or ``EVENTAGG_NO_NUMBA=1`` is set in the
environment. ``benchmarks/bench_kernels.py`` compares the two paths.

Conventions shared by all kernels:
  * numeric feature matrices are float64 with NaN marking an absent value;
  * categorical features are int64 codes with -1 marking absent;
  * mixed distances average per-dimension contributions: |a-b|/range for
    numerics (0 when the range is 0), 0/1 (mis)match for categoricals, and
    a full mismatch of 1 when exactly one side is absent.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("EVENTAGG_NO_NUMBA", "") == "1"

if not _DISABLED:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
else:
    USING_NUMBA = False


def window_starts_np(ts: np.ndarray, span_ms: int) -> np.ndarray:
    """Greedy forward windowing over sorted timestamps.

    Returns the indexes that open a new window: an event belongs to the
    current window while ``ts - ts[start] < span_ms`` (strict), and the
    first event beyond that bound opens the next window.
    """
    n = ts.shape[0]
    starts = []
    i = 0
    while i < n:
        starts.append(i)
        i = int(np.searchsorted(ts, ts[i] + span_ms, side="left"))
    return np.asarray(starts, dtype=np.int64)


def gower_to_centroid_np(
    num: np.ndarray,
    ranges: np.ndarray,
    cats: np.ndarray,
    cnum: np.ndarray,
    ccat: np.ndarray,
) -> np.ndarray:
    """Mixed distance of every row to one centroid, averaged over all dims."""
    n_dims = num.shape[1] + cats.shape[1]
    out = np.zeros(num.shape[0])
    if num.shape[1]:
        a_nan = np.isnan(num)
        b_nan = np.isnan(cnum)
        with np.errstate(invalid="ignore"):
            scaled = np.where(ranges > 0, np.abs(num - cnum) / np.where(ranges > 0, ranges, 1.0), 0.0)
        contrib = np.where(a_nan & b_nan, 0.0, np.where(a_nan ^ b_nan, 1.0, scaled))
        out += contrib.sum(axis=1)
    if cats.shape[1]:
        out += (cats != ccat).sum(axis=1)
    return out / n_dims


def min_inter_max_diam_np(points: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Smallest inter-cluster and largest intra-cluster Euclidean distance.

    Blocked so the fallback never materializes the full n x n matrix.
    """
    n = points.shape[0]
    min_inter = np.inf
    max_diam = 0.0
    block = 512
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        d2 = ((points[i0:i1, None, :] - points[None, :, :]) ** 2).sum(axis=-1)
        same = labels[i0:i1, None] == labels[None, :]
        upper = np.arange(i0, i1)[:, None] < np.arange(n)[None, :]
        inter = d2[upper & ~same]
        intra = d2[upper & same]
        if inter.size:
            min_inter = min(min_inter, float(inter.min()))
        if intra.size:
            max_diam = max(max_diam, float(intra.max()))
    return float(np.sqrt(min_inter)) if np.isfinite(min_inter) else np.inf, float(np.sqrt(max_diam))


if USING_NUMBA:

    @njit(cache=True)
    def _window_starts_nb(ts, span_ms):  # pragma: no cover - exercised via wrapper
        n = ts.shape[0]
        starts = np.empty(n, dtype=np.int64)
        count = 0
        i = 0
        while i < n:
            starts[count] = i
            count += 1
            bound = ts[i] + span_ms
            i += 1
            while i < n and ts[i] < bound:
                i += 1
        return starts[:count]

    @njit(cache=True)
    def _gower_to_centroid_nb(num, ranges, cats, cnum, ccat):  # pragma: no cover
        n = num.shape[0]
        dn = num.shape[1]
        dc = cats.shape[1]
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for j in range(dn):
                a = num[i, j]
                b = cnum[j]
                a_nan = np.isnan(a)
                b_nan = np.isnan(b)
                if a_nan and b_nan:
                    pass
                elif a_nan or b_nan:
                    acc += 1.0
                elif ranges[j] > 0:
                    acc += abs(a - b) / ranges[j]
            for j in range(dc):
                if cats[i, j] != ccat[j]:
                    acc += 1.0
            out[i] = acc / (dn + dc)
        return out

    @njit(cache=True)
    def _min_inter_max_diam_nb(points, labels):  # pragma: no cover
        n = points.shape[0]
        d = points.shape[1]
        min_inter = np.inf
        max_diam = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    acc += diff * diff
                if labels[i] == labels[j]:
                    if acc > max_diam:
                        max_diam = acc
                else:
                    if acc < min_inter:
                        min_inter = acc
        return np.sqrt(min_inter) if np.isfinite(min_inter) else np.inf, np.sqrt(max_diam)

    def window_starts(ts: np.ndarray, span_ms: int) -> np.ndarray:
        return _window_starts_nb(ts, np.int64(span_ms))

    def gower_to_centroid(num, ranges, cats, cnum, ccat) -> np.ndarray:
        return _gower_to_centroid_nb(num, ranges, cats, cnum, ccat)

    def min_inter_max_diam(points, labels) -> tuple[float, float]:
        a, b = _min_inter_max_diam_nb(points, labels)
        return float(a), float(b)

else:
    window_starts = window_starts_np
    gower_to_centroid = gower_to_centroid_np
    min_inter_max_diam = min_inter_max_diam_np


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed runs never include it."""
    ts = np.array([0, 10, 2000], dtype=np.int64)
    window_starts(ts, 1000)
    num = np.array([[0.0, np.nan], [1.0, 2.0]])
    cats = np.array([[0, 1], [1, -1]], dtype=np.int64)
    gower_to_centroid(num, np.array([1.0, 2.0]), cats, num[0], cats[0])
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]])
    min_inter_max_diam(pts, np.array([0, 0, 1], dtype=np.int64))
