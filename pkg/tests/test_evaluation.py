import numpy as np
import pytest

from defectlab.balancer import DistributionBalancer
from defectlab.data import DataError
from defectlab.evaluation import (
    LEAK_FREE,
    PAPER_FAITHFUL,
    boxplot_rows,
    cross_validate,
    fold_seeds,
    report_csv,
    report_markdown,
    split_folds,
    summary_markdown,
)
from defectlab.rbf import RBFNetworkClassifier

from conftest import two_blob


def test_fold_seeds_are_stable_and_distinct():
    assert fold_seeds(3, 5) == fold_seeds(3, 5)
    assert len(set(fold_seeds(3, 10))) == 10
    assert fold_seeds(3, 5) != fold_seeds(4, 5)


def test_stratified_folds_keep_proportions():
    labels = np.array([0] * 47 + [1] * 13 + [2] * 21)
    splits = split_folds(labels, 10, seed=1)
    seen = np.concatenate([te for _, te in splits])
    assert sorted(seen.tolist()) == list(range(labels.size))
    for _, te in splits:
        for c in range(3):
            n_c = (labels == c).sum()
            assert abs((labels[te] == c).sum() - n_c // 10) <= 1


def test_short_class_is_reported():
    with pytest.raises(DataError, match=r"\[1\]"):
        split_folds(np.array([0] * 20 + [1] * 3), 10, seed=0)


def test_unstratified_split_covers_all_rows():
    splits = split_folds(np.zeros(23, int), 5, seed=0, stratified=False)
    assert sorted(np.concatenate([te for _, te in splits]).tolist()) == list(range(23))


def test_leakfree_two_blob():
    rep = cross_validate(
        two_blob(),
        RBFNetworkClassifier(n_centers=2),
        DistributionBalancer(b="max"),
        mode=LEAK_FREE,
        seed=0,
    )
    assert rep.aggregate.accuracy >= 0.95
    assert rep.aggregate.balance >= 0.9
    assert len(rep.folds) == 10
    assert rep.positive == "defect"


def test_runs_are_deterministic_in_both_modes():
    d = two_blob(60, 20, seed=3, sep=1.0, std=1.0)
    for mode in (LEAK_FREE, PAPER_FAITHFUL):
        kw = dict(classifier=RBFNetworkClassifier(n_centers=3), balancer=DistributionBalancer(), mode=mode, seed=9)
        assert report_csv(cross_validate(d, **kw)) == report_csv(cross_validate(d, **kw))


def test_thread_count_does_not_change_results():
    d = two_blob(60, 20, seed=4, sep=1.0, std=1.0)
    kw = dict(classifier=RBFNetworkClassifier(n_centers=2), balancer=DistributionBalancer(b=40), seed=5)
    assert report_csv(cross_validate(d, n_jobs=1, **kw)) == report_csv(cross_validate(d, n_jobs=4, **kw))


def test_paper_mode_tests_on_balanced_rows():
    rep = cross_validate(two_blob(), RBFNetworkClassifier(n_centers=2), DistributionBalancer(b=30), mode=PAPER_FAITHFUL)
    assert rep.pooled_labels.size == 60


def test_no_balancer_and_positive_label():
    d = two_blob(40, 20)
    rep = cross_validate(d, RBFNetworkClassifier(n_centers=2), None, folds=5, positive="clean")
    assert rep.positive == "clean"
    assert rep.pooled_labels.size == 60


def test_bad_mode_and_folds():
    with pytest.raises(ValueError):
        cross_validate(two_blob(), mode="sloppy")
    with pytest.raises(ValueError):
        cross_validate(two_blob(), folds=1)
    with pytest.raises(DataError):
        cross_validate(two_blob(), positive="nope")


def test_report_writers():
    rep = cross_validate(two_blob(50, 20), RBFNetworkClassifier(n_centers=2), DistributionBalancer(), folds=5)
    csv_text = report_csv(rep)
    lines = csv_text.splitlines()
    assert lines[0] == "fold,accuracy,precision,recall,f_score,auc,balance"
    assert len(lines) == 7 and lines[-1].startswith("aggregate,")
    assert all(cell != "" for cell in lines[-1].split(","))
    md = report_markdown("blobs", rep)
    assert "| % Accuracy | Precision | Recall | F-score | Time in seconds | ROC Area (AUC) | Balance |" in md
    summary = summary_markdown({"a": rep, "b": rep})
    assert "| Average |" in summary
    box = boxplot_rows({"a": rep}).splitlines()
    assert box[0] == "dataset,metric,fold,value"
    assert len(box) == 1 + 4 * 5
