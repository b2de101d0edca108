"""Cross-validated evaluation of the balance-then-classify pipeline.

Two protocols:

``"paper"``
    Impute, encode and balance the whole dataset, then split the regenerated
    rows into folds. Test folds contain synthetic rows, so scores are
    optimistic.
``"leakfree"``
    Split the raw rows first; imputation statistics and the balancer are fit
    on the training folds only and test folds are left untouched.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import clone
from sklearn.model_selection import KFold, StratifiedKFold

from .balancer import DistributionBalancer
from .data import DataError, Dataset, EncodedDataset, GlobalImputer, NominalEncoder
from .metrics import MetricReport, auc, confusion_matrix, metrics
from .rbf import RBFNetworkClassifier

__all__ = [
    "PAPER_FAITHFUL",
    "LEAK_FREE",
    "CVReport",
    "fold_seeds",
    "split_folds",
    "cross_validate",
    "report_csv",
    "report_markdown",
    "summary_markdown",
    "boxplot_rows",
    "timing_csv",
]

PAPER_FAITHFUL = "paper"
LEAK_FREE = "leakfree"
_MODES = (PAPER_FAITHFUL, LEAK_FREE)
_MODE_ALIASES = {"paper": PAPER_FAITHFUL, "paper_faithful": PAPER_FAITHFUL, "leakfree": LEAK_FREE, "leak_free": LEAK_FREE}

METRIC_COLUMNS = ("accuracy", "precision", "recall", "f_score", "auc", "balance")


@dataclass
class CVReport:
    folds: list[MetricReport]
    aggregate: MetricReport
    mode: str
    seed: int
    positive: str
    pooled_labels: np.ndarray = field(repr=False, default=None)
    pooled_scores: np.ndarray = field(repr=False, default=None)
    balance_time: float = 0.0


def fold_seeds(seed: int, n: int) -> list[int]:
    """Independent 64-bit seeds derived from ``(seed, index)``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def split_folds(labels, folds: int, seed: int, stratified: bool = True):
    """``(train, test)`` index pairs; stratified folds keep class proportions."""
    labels = np.asarray(labels)
    rs = int(np.random.SeedSequence(seed).generate_state(1)[0])
    if stratified:
        counts = np.bincount(labels)
        short = [int(c) for c, n in enumerate(counts) if 0 < n < folds]
        if short:
            raise DataError(f"classes {short} have fewer than {folds} instances")
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=rs)
        return list(splitter.split(np.zeros(len(labels)), labels))
    splitter = KFold(n_splits=folds, shuffle=True, random_state=rs)
    return list(splitter.split(np.zeros(len(labels))))


def _resolve_positive(schema_classes, positive) -> int:
    if positive is None:
        return 1 if len(schema_classes) > 1 else 0
    if isinstance(positive, str):
        if positive not in schema_classes:
            raise DataError(f"positive label {positive!r} not among classes {list(schema_classes)}")
        return schema_classes.index(positive)
    return int(positive)


def _balance(balancer, enc: EncodedDataset, seed: int) -> EncodedDataset:
    if balancer is None:
        return enc
    b = clone(balancer).set_params(
        onehot_groups=enc.onehot_groups, binary_columns=enc.binary_columns, random_state=seed
    )
    X, y = b.fit_resample(enc.matrix, enc.labels)
    return enc.with_rows(X, y)


def _evaluate_fold(classifier, balancer, train: EncodedDataset, test: EncodedDataset, seeds, positive):
    bal_seed, clf_seed = seeds
    t0 = time.perf_counter()
    train = _balance(balancer, train, bal_seed)
    t1 = time.perf_counter()
    clf = clone(classifier).set_params(random_state=clf_seed)
    clf.fit(train.matrix, train.labels)
    t2 = time.perf_counter()
    scores = clf.decision_function(test.matrix)
    pred = clf.predict(test.matrix)
    t3 = time.perf_counter()
    col = np.flatnonzero(clf.classes_ == positive)
    pos_score = scores[:, col[0]] if col.size else np.zeros(test.n_rows)
    cm = confusion_matrix(test.labels, pred, train.classes, positive)
    is_pos = test.labels == positive
    rep = metrics(cm)
    rep = replace(rep, auc=auc(pos_score[is_pos], pos_score[~is_pos]), train_time=t2 - t1, test_time=t3 - t2)
    return rep, pos_score, t1 - t0


def cross_validate(
    d: Dataset,
    classifier: RBFNetworkClassifier | None = None,
    balancer: DistributionBalancer | None = None,
    folds: int = 10,
    mode: str = LEAK_FREE,
    seed: int = 0,
    positive=None,
    stratified: bool = True,
    n_jobs: int | None = None,
) -> CVReport:
    """Run ``folds``-fold cross-validation and return per-fold and pooled scores.

    Fold metrics are averaged without weighting; AUC is computed once from
    the pooled test scores. Folds run on up to ``n_jobs`` threads (default:
    ``DEFECTLAB_THREADS`` or 1); results do not depend on the thread count.
    """
    mode = _MODE_ALIASES.get(str(mode).lower())
    if mode is None:
        raise ValueError(f"mode must be one of {_MODES}")
    if folds < 2:
        raise ValueError("folds must be at least 2")
    classifier = classifier if classifier is not None else RBFNetworkClassifier()
    pos = _resolve_positive(d.schema.classes, positive)
    seeds = fold_seeds(seed, folds + 2)
    split_seed, paper_seed, per_fold = seeds[0], seeds[1], seeds[2:]
    pair_seeds = [tuple(int(s) for s in np.random.SeedSequence(s).generate_state(2, dtype=np.uint64)) for s in per_fold]

    encoder = NominalEncoder().fit(d)
    balance_time = 0.0
    if mode == PAPER_FAITHFUL:
        full = encoder.transform(GlobalImputer().fit(d).transform(d))
        t0 = time.perf_counter()
        full = _balance(balancer, full, paper_seed)
        balance_time = time.perf_counter() - t0
        splits = split_folds(full.labels, folds, split_seed, stratified)
        jobs = [(full.subset(tr), full.subset(te)) for tr, te in splits]
        balancer_per_fold = None
    else:
        splits = split_folds(d.labels, folds, split_seed, stratified)
        jobs = []
        for tr, te in splits:
            train_raw, test_raw = d.subset(tr), d.subset(te)
            imp = GlobalImputer().fit(train_raw)
            jobs.append((encoder.transform(imp.transform(train_raw)), encoder.transform(imp.transform(test_raw))))
        balancer_per_fold = balancer

    if n_jobs is None:
        n_jobs = int(os.environ.get("DEFECTLAB_THREADS", "1") or 1)
    work = [
        (classifier, balancer_per_fold, train, test, pair_seeds[f], pos) for f, (train, test) in enumerate(jobs)
    ]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(lambda args: _evaluate_fold(*args), work))
    else:
        results = [_evaluate_fold(*args) for args in work]

    fold_reports = [r for r, _, _ in results]
    balance_time += sum(bt for _, _, bt in results)
    pooled_labels = np.concatenate([test.labels for _, test in jobs])
    pooled_scores = np.concatenate([s for _, s, _ in results])
    is_pos = pooled_labels == pos

    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in fold_reports]))

    aggregate = MetricReport(
        accuracy=mean("accuracy"),
        precision=mean("precision"),
        recall=mean("recall"),
        f_score=mean("f_score"),
        balance=mean("balance"),
        pd=mean("pd"),
        pf=mean("pf"),
        auc=auc(pooled_scores[is_pos], pooled_scores[~is_pos]),
        train_time=mean("train_time"),
        test_time=mean("test_time"),
    )
    return CVReport(
        folds=fold_reports,
        aggregate=aggregate,
        mode=mode,
        seed=seed,
        positive=d.schema.classes[pos],
        pooled_labels=pooled_labels,
        pooled_scores=pooled_scores,
        balance_time=balance_time,
    )


# ------------------------------------------------------------------------ reports


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def report_csv(report: CVReport) -> str:
    """One row per fold plus an ``aggregate`` row; timings are left out so
    reruns with the same seed are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("fold",) + METRIC_COLUMNS)
    rows = [(str(i + 1), r) for i, r in enumerate(report.folds)] + [("aggregate", report.aggregate)]
    for name, r in rows:
        w.writerow([name] + [_fmt(getattr(r, c)) for c in METRIC_COLUMNS])
    return buf.getvalue()


def timing_csv(report: CVReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("fold", "train_time", "test_time"))
    for i, r in enumerate(report.folds):
        w.writerow([i + 1, f"{r.train_time:.6f}", f"{r.test_time:.6f}"])
    w.writerow(["aggregate", f"{report.aggregate.train_time:.6f}", f"{report.aggregate.test_time:.6f}"])
    return buf.getvalue()


_MD_HEADER = "| Dataset | % Accuracy | Precision | Recall | F-score | Time in seconds | ROC Area (AUC) | Balance |"


def _md_row(name: str, r: MetricReport) -> str:
    auc_s = "n/a" if r.auc is None else f"{r.auc:.3f}"
    return (
        f"| {name} | {100 * r.accuracy:.2f} | {r.precision:.3f} | {r.recall:.3f} | {r.f_score:.3f} "
        f"| {r.train_time:.3f} | {auc_s} | {r.balance:.3f} |"
    )


def summary_markdown(reports: dict[str, CVReport]) -> str:
    lines = [_MD_HEADER, "|" + "---|" * 8]
    lines += [_md_row(name, rep.aggregate) for name, rep in reports.items()]
    if len(reports) > 1:
        aggs = [rep.aggregate for rep in reports.values()]
        aucs = [a.auc for a in aggs if a.auc is not None]
        avg = MetricReport(
            accuracy=float(np.mean([a.accuracy for a in aggs])),
            precision=float(np.mean([a.precision for a in aggs])),
            recall=float(np.mean([a.recall for a in aggs])),
            f_score=float(np.mean([a.f_score for a in aggs])),
            balance=float(np.mean([a.balance for a in aggs])),
            pd=float(np.mean([a.pd for a in aggs])),
            pf=float(np.mean([a.pf for a in aggs])),
            auc=float(np.mean(aucs)) if aucs else None,
            train_time=float(np.mean([a.train_time for a in aggs])),
        )
        lines.append(_md_row("Average", avg))
    return "\n".join(lines) + "\n"


def report_markdown(name: str, report: CVReport) -> str:
    lines = [f"## {name} ({report.mode}, seed {report.seed}, positive class {report.positive!r})", ""]
    lines += [_MD_HEADER, "|" + "---|" * 8]
    lines += [_md_row(f"fold {i + 1}", r) for i, r in enumerate(report.folds)]
    lines.append(_md_row("aggregate", report.aggregate))
    return "\n".join(lines) + "\n"


def boxplot_rows(reports: dict[str, CVReport]) -> str:
    """Long-format per-fold metric vectors for external box plots."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("dataset", "metric", "fold", "value"))
    for name, rep in reports.items():
        for metric in ("accuracy", "balance", "auc", "f_score"):
            for i, r in enumerate(rep.folds):
                w.writerow([name, metric, i + 1, _fmt(getattr(r, metric))])
    return buf.getvalue()
