"""Rank-correlation statistics and profile-table emission."""
from __future__ import annotations

import csv
import math

import numpy as np
from scipy import stats

from .errors import AllTiedError, LengthMismatchError, NonFiniteValueError


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise LengthMismatchError(f"list lengths differ: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError(f"need at least 2 scores, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteValueError("scores contain NaN or Inf")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise AllTiedError("a constant list carries no ranking information")
    return a, b


def kendall_tau(a, b) -> float:
    """Tie-adjusted tau-b rank correlation; equals tau-a on tie-free lists."""
    a, b = _paired(a, b)
    return float(stats.kendalltau(a, b, variant="b").statistic)


def spearman_rho(a, b) -> float:
    """Pearson correlation of average-tied ranks.

    On tie-free lists this equals the classic 1 - 6*Sum(d^2)/(n(n^2-1)).
    """
    a, b = _paired(a, b)
    x = stats.rankdata(a, method="average")
    y = stats.rankdata(b, method="average")
    x = x - x.mean()
    y = y - y.mean()
    return float(np.dot(x, y) / math.sqrt(float(np.dot(x, x)) * float(np.dot(y, y))))


def correlation_report(a, b) -> dict:
    """Both coefficients plus the sample count, ready for serialization."""
    a_arr = np.asarray(a, dtype=np.float64).ravel()
    return {
        "kendall": kendall_tau(a, b),
        "spearman": spearman_rho(a, b),
        "n": int(a_arr.size),
    }


def emit_profile_csv(profiles, path) -> None:
    """Write ``name,relative_depth,lid`` rows, one per (profile, layer).

    Relative depth is layer_index / (L - 1), or 0 for a single-layer
    profile; all profiles must share one length.
    """
    rows = []
    length = None
    for name, profile in profiles:
        values = np.asarray(profile, dtype=np.float64).ravel()
        if length is None:
            length = values.size
        elif values.size != length:
            raise LengthMismatchError(
                f"profile {name!r} has length {values.size}, expected {length}"
            )
        for l, value in enumerate(values):
            depth = l / (length - 1) if length > 1 else 0.0
            rows.append([str(name), repr(float(depth)), repr(float(value))])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "relative_depth", "lid"])
        writer.writerows(rows)
