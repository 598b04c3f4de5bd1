"""Classification and effect-size metrics.

All functions are pure and take array-likes. Rank statistics use midranks
for ties.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

EXACT_LIMIT = 400  # exact Mann-Whitney p when n_a * n_b <= this


class MetricError(ValueError):
    pass


def _binary(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise MetricError("labels must be one-dimensional")
    uniq = set(np.unique(y).tolist())
    if not uniq <= {0, 1, True, False}:
        raise MetricError(f"labels must be binary 0/1, got values {sorted(uniq)}")
    return y.astype(bool)


def roc_auc(scores, labels) -> float:
    """Rank-based AUC: P(score_pos > score_neg) with ties counted as 1/2."""
    s = np.asarray(scores, dtype=float)
    y = _binary(labels)
    if s.shape != y.shape:
        raise MetricError("scores and labels differ in length")
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise MetricError("roc_auc needs both classes present")
    ranks = rankdata(s)
    u = ranks[y].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def f1_score(scores, labels, threshold: float = 0.5) -> float:
    """F1 of the positive class for predictions ``score >= threshold``."""
    y = _binary(labels)
    if y.all() or not y.any():
        raise MetricError("f1_score needs both classes present")
    pred = np.asarray(scores, dtype=float) >= threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    if tp + fp == 0 or tp + fn == 0:
        warnings.warn("f1_score: zero precision or recall denominator, returning 0", RuntimeWarning, stacklevel=2)
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def pearson_r(x, y) -> float:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise MetricError("pearson_r needs two 1-D vectors of equal length")
    da = a - a.mean()
    db = b - b.mean()
    sa = float(np.sqrt(np.dot(da, da)))
    sb = float(np.sqrt(np.dot(db, db)))
    if sa == 0.0 or sb == 0.0:
        raise MetricError("pearson_r undefined: zero variance")
    return float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))


def cohens_d(group_a, group_b) -> float:
    """(mean_a - mean_b) / pooled sd, pooled with n - 1 weights."""
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    na, nb = a.size, b.size
    if na < 1 or nb < 1 or na + nb < 3:
        raise MetricError("cohens_d needs non-empty groups and at least three values")
    ss = (np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2))
    pooled = math.sqrt(ss / (na + nb - 2))
    if pooled == 0.0:
        raise MetricError("cohens_d undefined: zero pooled standard deviation")
    return float((a.mean() - b.mean()) / pooled)


@dataclass(frozen=True)
class MannWhitney:
    u: float  # U of the first group: pairs a > b plus half the ties
    p: float  # two-sided
    method: str  # exact | normal


def _exact_p(doubled_ranks: np.ndarray, n_a: int, w_obs: int) -> float:
    """Two-sided permutation p for the sum of n_a doubled midranks.

    ``dist[j, s]`` is the probability mass of size-j subsets with doubled
    rank sum s, built one pooled value at a time.
    """
    total = int(doubled_ranks.sum())
    dist = np.zeros((n_a + 1, total + 1))
    dist[0, 0] = 1.0
    for v in doubled_ranks.astype(np.int64):
        dist[1:, v:] = dist[1:, v:] + dist[:-1, : total + 1 - v]
    counts = dist[n_a]
    counts = counts / counts.sum()
    lower = counts[: w_obs + 1].sum()
    upper = counts[w_obs:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def _normal_p(u: float, n_a: int, n_b: int, ranks: np.ndarray) -> float:
    n = n_a + n_b
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    z = max(0.0, abs(u - n_a * n_b / 2.0) - 0.5) / math.sqrt(var)
    return float(min(1.0, math.erfc(z / math.sqrt(2.0))))


def mann_whitney_u(group_a, group_b, method: str = "auto") -> MannWhitney:
    """Mann-Whitney U with midrank ties.

    ``method="auto"`` enumerates the exact permutation distribution when
    ``n_a * n_b <= 400`` and otherwise uses the normal approximation with tie
    and continuity corrections.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    na, nb = a.size, b.size
    if na == 0 or nb == 0:
        raise MetricError("mann_whitney_u needs two non-empty groups")
    ranks = rankdata(np.concatenate([a, b]))
    r_a = float(ranks[:na].sum())
    u = r_a - na * (na + 1) / 2.0
    if method == "auto":
        method = "exact" if na * nb <= EXACT_LIMIT else "normal"
    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        p = _exact_p(doubled, na, int(round(2 * r_a)))
    elif method == "normal":
        p = _normal_p(u, na, nb, ranks)
    else:
        raise ValueError(f"unknown method {method!r}")
    return MannWhitney(float(u), p, method)
