"""Rank-based classifier comparison: omnibus test, post-hoc pairs, adjustments."""

from .posthoc import (
    ADJUSTMENTS,
    METHODS,
    PosthocMatrix,
    adjust,
    benjamini_hochberg,
    holm,
    pairwise_statistics,
    posthoc,
)
from .ranks import MannWhitneyResult, RankData, TestResult, kruskal_wallis, mann_whitney, rank_data
from .special import chisq_sf, normal_sf, student_t_sf, studentized_range_sf

__all__ = [
    "ADJUSTMENTS",
    "METHODS",
    "MannWhitneyResult",
    "PosthocMatrix",
    "RankData",
    "TestResult",
    "adjust",
    "benjamini_hochberg",
    "chisq_sf",
    "holm",
    "kruskal_wallis",
    "mann_whitney",
    "normal_sf",
    "pairwise_statistics",
    "posthoc",
    "rank_data",
    "student_t_sf",
    "studentized_range_sf",
]
