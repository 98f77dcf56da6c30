"""Exact Euclidean k-NN distances and MLE local-intrinsic-dimension estimation.

The estimator is the nearest-neighbor maximum-likelihood one (Levina & Bickel):
for a reference point with ascending neighbor distances ``r_1 <= ... <= r_k``
the local dimension is ``-1 / mean(log(r_i / r_k))``, and a batch-level value
is the mean of the per-row estimates. Log-ratio sums are always accumulated in
float64 regardless of the input storage width.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    DegenerateNeighborhoodError,
    InvalidDimsError,
    InvalidIndexError,
    KTooLargeError,
    ZeroDistanceError,
)

DEFAULT_K = 20
# Value substituted for a degenerate neighborhood when clamping is requested.
LID_MAX = 1.0e6

# Rows per cdist block, chosen so one block stays ~32 MB for b up to 1e4.
_BLOCK_ELEMS = 1 << 22


class LayerLid(NamedTuple):
    """Batch-level LID estimate plus the number of rows skipped as duplicates."""

    value: float
    skipped_rows: int


def _as_batch(batch) -> np.ndarray:
    """Coerce input to a finite float64 b x m matrix (1-D input = width 1)."""
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"batch must be a b x m matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("batch contains NaN or Inf")
    return arr


def knn_distances(batch, ref_index: int, k: int) -> np.ndarray:
    """Distances from one row to its k nearest other rows, ascending.

    The reference row itself is excluded. Ties at the k-th neighbor are
    resolved by a stable sort on (distance, original row index), so the
    result is deterministic.
    """
    x = _as_batch(batch)
    b = x.shape[0]
    if not 0 <= ref_index < b:
        raise InvalidIndexError(f"ref_index {ref_index} outside batch of {b} rows")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > b - 1:
        raise KTooLargeError(f"k={k} but only {b - 1} other rows are available")
    d = cdist(x[ref_index : ref_index + 1], x)[0]
    d = np.delete(d, ref_index)
    order = np.argsort(d, kind="stable")
    return d[order[:k]]


def mle_lid(distances, degenerate: str = "error", lid_max: float = LID_MAX) -> float:
    """MLE local intrinsic dimension from ascending neighbor distances.

    Parameters
    ----------
    distances : array-like
        Ascending, strictly positive distances r_1..r_k; r_k is the largest.
    degenerate : {"error", "clamp"}
        Policy when all k distances are equal (the log-ratio sum is zero):
        raise, or return ``lid_max``.
    """
    nd = np.asarray(distances, dtype=np.float64).ravel()
    if nd.size < 1:
        raise ValueError("need at least one neighbor distance")
    if not np.all(np.isfinite(nd)):
        raise ValueError("neighbor distances contain NaN or Inf")
    if np.any(nd == 0.0):
        raise ZeroDistanceError("zero neighbor distance (duplicate points)")
    if np.any(nd < 0.0):
        raise ValueError("neighbor distances must be positive")
    if np.any(np.diff(nd) < 0.0):
        raise ValueError("neighbor distances must be ascending")
    log_sum = np.log(nd / nd[-1]).sum()
    if log_sum == 0.0:
        if degenerate == "clamp":
            return float(lid_max)
        raise DegenerateNeighborhoodError(
            "all neighbor distances equal; estimator undefined"
        )
    return float(-1.0 / (log_sum / nd.size))


def _block_rows(b: int) -> int:
    return max(1, min(b, _BLOCK_ELEMS // max(b, 1)))


def layer_lid(
    batch,
    k: int = DEFAULT_K,
    degenerate: str = "error",
    lid_max: float = LID_MAX,
) -> LayerLid:
    """Mean per-row MLE intrinsic dimension of a batch of representations.

    Every row in turn is the reference point against the rest of the batch.
    Rows at distance exactly zero are excluded from each other's neighbor
    sets; a row left with fewer than k valid neighbors is skipped and counted
    in ``skipped_rows``. If every row is skipped the batch is degenerate and
    a :class:`ZeroDistanceError` is raised.
    """
    x = _as_batch(batch)
    b = x.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > b - 1:
        raise KTooLargeError(f"k={k} needs at least {k + 1} rows, batch has {b}")

    estimates = np.empty(b, dtype=np.float64)
    valid = np.ones(b, dtype=bool)
    step = _block_rows(b)
    for start in range(0, b, step):
        stop = min(start + step, b)
        d = cdist(x[start:stop], x)
        for r in range(stop - start):
            d[r, start + r] = np.inf  # exclude self
        dup_rows = (d == 0.0).any(axis=1)
        clean = ~dup_rows
        if clean.any():
            knn = np.sort(d[clean], axis=1)[:, :k]
            logs = np.log(knn / knn[:, -1:])
            sums = logs.sum(axis=1)
            flat = sums == 0.0
            if flat.any() and degenerate != "clamp":
                row = start + np.flatnonzero(clean)[np.argmax(flat)]
                raise DegenerateNeighborhoodError(
                    f"row {row}: all {k} neighbor distances equal"
                )
            vals = np.empty(sums.shape, dtype=np.float64)
            vals[flat] = lid_max
            vals[~flat] = -1.0 / (sums[~flat] / k)
            estimates[start + np.flatnonzero(clean)] = vals
        for r in np.flatnonzero(dup_rows):
            row = start + r
            pos = d[r][(d[r] > 0.0) & np.isfinite(d[r])]
            if pos.size < k:
                valid[row] = False
                continue
            nd = np.sort(pos)[:k]
            estimates[row] = mle_lid(nd, degenerate=degenerate, lid_max=lid_max)

    if not valid.any():
        raise ZeroDistanceError(
            "every row is a duplicate of others; no neighborhoods of size k remain"
        )
    value = float(np.mean(estimates[valid]))
    return LayerLid(value=value, skipped_rows=int(b - valid.sum()))


def embedded_gaussian(rng: np.random.Generator, d: int, ambient: int, n: int) -> np.ndarray:
    """n standard-Gaussian samples in d dims pushed through a random orthonormal map."""
    if not 1 <= d <= ambient:
        raise InvalidDimsError(f"intrinsic dim {d} must satisfy 1 <= d <= {ambient}")
    base = rng.standard_normal((n, d))
    q, r = np.linalg.qr(rng.standard_normal((ambient, d)))
    signs = np.sign(np.diagonal(r)).copy()
    signs[signs == 0.0] = 1.0  # canonical sign so the map is reproducible
    return base @ (q * signs).T


def synth_manifold(d: int, ambient: int, n: int, seed: int) -> np.ndarray:
    """Deterministic d-dimensional Gaussian manifold embedded in ``ambient`` dims.

    Identical (d, ambient, n, seed) always yields a bit-identical n x ambient
    batch; the rows span exactly a d-dimensional linear subspace.
    """
    if not 1 <= d <= ambient:
        raise InvalidDimsError(f"intrinsic dim {d} must satisfy 1 <= d <= {ambient}")
    if n < d + 2:
        raise ValueError(f"need n >= d + 2 samples, got n={n} for d={d}")
    return embedded_gaussian(np.random.default_rng(seed), d, ambient, n)
