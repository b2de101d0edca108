"""Pooled midranks and the rank tests built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .special import chisq_sf, normal_sf

__all__ = ["RankData", "TestResult", "MannWhitneyResult", "rank_data", "kruskal_wallis", "mann_whitney"]


@dataclass(frozen=True)
class RankData:
    """Pooled ranking of ``k`` independent groups."""

    values: np.ndarray
    group_index: np.ndarray
    ranks: np.ndarray
    sizes: np.ndarray
    tie_sizes: np.ndarray

    @property
    def n_total(self) -> int:
        return int(self.sizes.sum())

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def rank_sums(self) -> np.ndarray:
        return np.bincount(self.group_index, weights=self.ranks, minlength=self.k)

    @property
    def mean_ranks(self) -> np.ndarray:
        return self.rank_sums / self.sizes

    @property
    def tie_term(self) -> float:
        """Sum of t^3 - t over tie blocks."""
        t = self.tie_sizes.astype(float)
        return float((t**3 - t).sum())

    @property
    def tie_correction(self) -> float:
        """``1 - T / (N^3 - N)``; zero when every value is tied."""
        n = self.n_total
        if n < 2:
            return 1.0
        return 1.0 - self.tie_term / (n**3 - n)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int | None
    p_value: float
    method: str

    __test__ = False  # keep pytest from collecting this as a test class


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    u_a: float
    u_b: float
    z: float
    p_value: float
    method: str = "mann-whitney"


def rank_data(groups: Sequence[Sequence[float]]) -> RankData:
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    arrays = [np.asarray(g, dtype=float).ravel() for g in groups]
    for i, a in enumerate(arrays):
        if a.size == 0:
            raise ValueError(f"group {i} is empty")
    values = np.concatenate(arrays)
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    group_index = np.repeat(np.arange(len(arrays)), [a.size for a in arrays])
    _, counts = np.unique(values, return_counts=True)
    return RankData(
        values=values,
        group_index=group_index,
        ranks=rankdata(values, method="average"),
        sizes=np.array([a.size for a in arrays]),
        tie_sizes=counts[counts > 1],
    )


def kruskal_h(rd: RankData) -> float:
    """Tie-corrected H; 0 when every observation is tied."""
    n = rd.n_total
    h = 12.0 / (n * (n + 1)) * float((rd.rank_sums**2 / rd.sizes).sum()) - 3.0 * (n + 1)
    c = rd.tie_correction
    if c <= 0:
        return 0.0
    return max(h / c, 0.0)


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H test with tie correction."""
    rd = rank_data(groups)
    if rd.n_total < 3:
        raise ValueError("Kruskal-Wallis needs at least 3 observations")
    df = rd.k - 1
    if rd.tie_correction <= 0:
        return TestResult(0.0, df, 1.0, "kruskal-wallis")
    h = kruskal_h(rd)
    return TestResult(h, df, chisq_sf(h, df), "kruskal-wallis")


def mann_whitney(a, b, continuity: bool = True, tie_correction: bool = False) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test, normal approximation.

    ``u_a`` counts pairs where ``b`` exceeds ``a`` (ties count half), so
    ``u_a + u_b == len(a) * len(b)``. The defaults (continuity on, tie
    correction off) mirror common online calculators.
    """
    rd = rank_data([a, b])
    na, nb = (int(s) for s in rd.sizes)
    n = na + nb
    ra = float(rd.rank_sums[0])
    u_a = na * nb + na * (na + 1) / 2.0 - ra
    u_b = na * nb - u_a
    u = min(u_a, u_b)
    mu = na * nb / 2.0
    if u == mu:
        return MannWhitneyResult(u, u_a, u_b, 0.0, 1.0)
    tie = rd.tie_term / (n * (n - 1)) if tie_correction else 0.0
    var = na * nb / 12.0 * ((n + 1) - tie)
    if var <= 0:
        return MannWhitneyResult(u, u_a, u_b, 0.0, 1.0)
    diff = u - mu
    if continuity:
        diff += 0.5 * math.copysign(1.0, mu - u)
    z = diff / math.sqrt(var)
    p = min(1.0, 2.0 * normal_sf(abs(z)))
    return MannWhitneyResult(u, u_a, u_b, z, p)
