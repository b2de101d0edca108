"""Pairwise post-hoc tests after Kruskal-Wallis, and p-value adjustment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ranks import RankData, kruskal_h, rank_data
from .special import chisq_sf, normal_sf, student_t_sf, studentized_range_sf

__all__ = [
    "METHODS",
    "ADJUSTMENTS",
    "PosthocMatrix",
    "posthoc",
    "pairwise_statistics",
    "holm",
    "benjamini_hochberg",
    "adjust",
]

METHODS = ("conover", "dunn", "nemenyi_tukey", "nemenyi_chisq")
ADJUSTMENTS = ("none", "holm", "bh")


def holm(p) -> np.ndarray:
    """Holm step-down FWER adjustment."""
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, (m - np.arange(m)) * p[order])
    out = np.empty(m)
    out[order] = np.maximum.accumulate(scaled)
    return out


def benjamini_hochberg(p) -> np.ndarray:
    """Benjamini-Hochberg step-up FDR adjustment."""
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, m * p[order] / np.arange(1, m + 1))
    out = np.empty(m)
    out[order] = np.minimum.accumulate(scaled[::-1])[::-1]
    return out


def adjust(p, method: str | None) -> np.ndarray:
    method = (method or "none").lower()
    if method == "none":
        return np.asarray(p, dtype=float).copy()
    if method == "holm":
        return holm(p)
    if method in ("bh", "fdr_bh", "benjamini-hochberg"):
        return benjamini_hochberg(p)
    raise ValueError(f"unknown adjustment {method!r}")


@dataclass(frozen=True)
class PosthocMatrix:
    """Symmetric pairwise p-values; NaN on the diagonal.

    ``lower_triangle()`` yields ``(row name, column name, p)`` for ``i > j``.
    """

    method: str
    adjustment: str
    names: tuple[str, ...]
    p_values: np.ndarray
    statistics: np.ndarray

    def pair(self, a: str, b: str) -> float:
        i, j = self.names.index(a), self.names.index(b)
        return float(self.p_values[i, j])

    def lower_triangle(self):
        for i in range(1, len(self.names)):
            for j in range(i):
                yield self.names[i], self.names[j], float(self.p_values[i, j])


def pairwise_statistics(rd: RankData, method: str, h: float | None = None):
    """Signed statistics and raw two-sided p-values for every pair ``i > j``."""
    n, k = rd.n_total, rd.k
    rbar = rd.mean_ranks
    sizes = rd.sizes.astype(float)
    if h is None:
        h = kruskal_h(rd)
    all_tied = rd.tie_correction <= 0
    pairs = [(i, j) for i in range(1, k) for j in range(i)]
    stats, pvals = [], []
    for i, j in pairs:
        diff = rbar[i] - rbar[j]
        inv = 1.0 / sizes[i] + 1.0 / sizes[j]
        if all_tied or diff == 0:
            stats.append(0.0)
            pvals.append(1.0)
            continue
        if method == "conover":
            s2 = (float((rd.ranks**2).sum()) - n * (n + 1) ** 2 / 4.0) / (n - 1)
            dfe = n - k
            var = s2 * ((n - 1 - h) / dfe) * inv if dfe > 0 else 0.0
            if var <= 0:
                # zero residual rank variance: perfect separation
                stats.append(math.copysign(math.inf, diff))
                pvals.append(0.0)
                continue
            t = diff / math.sqrt(var)
            stats.append(t)
            pvals.append(min(1.0, 2.0 * student_t_sf(abs(t), dfe)))
        elif method == "dunn":
            var = (n * (n + 1) / 12.0 - rd.tie_term / (12.0 * (n - 1))) * inv
            z = diff / math.sqrt(var)
            stats.append(z)
            pvals.append(min(1.0, 2.0 * normal_sf(abs(z))))
        elif method == "nemenyi_tukey":
            q = abs(diff) / math.sqrt(n * (n + 1) / 24.0 * inv)
            stats.append(q)
            pvals.append(studentized_range_sf(q, k))
        elif method == "nemenyi_chisq":
            chi = diff**2 / (n * (n + 1) / 12.0 * inv) / rd.tie_correction
            stats.append(chi)
            pvals.append(chisq_sf(chi, k - 1))
        else:
            raise ValueError(f"unknown post-hoc method {method!r}; expected one of {METHODS}")
    return pairs, np.array(stats), np.array(pvals)


def posthoc(
    groups: Sequence[Sequence[float]],
    method: str = "conover",
    adjustment: str | None = None,
    names: Sequence[str] | None = None,
) -> PosthocMatrix:
    """Pairwise comparison matrix for ``method`` in :data:`METHODS`.

    Adjustment runs over the ``k (k - 1) / 2`` pairwise p-values.
    """
    method = method.lower()
    rd = rank_data(groups)
    names = tuple(names) if names is not None else tuple(str(i) for i in range(rd.k))
    if len(names) != rd.k:
        raise ValueError("names must match the number of groups")
    pairs, stats, raw = pairwise_statistics(rd, method)
    adjusted = adjust(raw, adjustment)
    P = np.full((rd.k, rd.k), np.nan)
    S = np.full((rd.k, rd.k), np.nan)
    for (i, j), s, p in zip(pairs, stats, adjusted):
        P[i, j] = P[j, i] = p
        S[i, j] = s
        S[j, i] = -s if method in ("conover", "dunn") else s
    return PosthocMatrix(method, (adjustment or "none").lower(), names, P, S)
