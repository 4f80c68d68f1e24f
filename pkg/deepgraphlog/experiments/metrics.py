"""
Classification and ranking metrics, plus aggregation over repeated seeds.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from logging_setup import Component, get_logger

from ..errors import DataError

logger = get_logger(Component.EXPERIMENTS)

THRESHOLD = 0.5

# (score of the true item, scores of the competing candidates)
RankingGroup = Tuple[float, Sequence[float]]


@dataclass
class MetricReport:
    """Named metric values of one run; names use ``variant/metric`` paths."""

    values: Dict[str, float] = field(default_factory=dict)

    def update(self, other: Mapping[str, float], prefix: str = "") -> "MetricReport":
        for name, value in other.items():
            self.values[f"{prefix}{name}"] = float(value)
        return self

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["metric", "value"])
            for name in sorted(self.values):
                writer.writerow([name, repr(self.values[name])])


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    mean: float
    stddev: float
    n: int


def accuracy(scores: Sequence[float], truth: Sequence[int]) -> float:
    predicted = np.asarray(scores) >= THRESHOLD
    return float(np.mean(predicted == np.asarray(truth, dtype=bool)))


def f1_score(scores: Sequence[float], truth: Sequence[int]) -> float:
    """F1 of the positive class; 1.0 when there is nothing to find and nothing predicted."""
    predicted = np.asarray(scores) >= THRESHOLD
    actual = np.asarray(truth, dtype=bool)
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    denominator = 2 * tp + fp + fn
    return 1.0 if denominator == 0 else 2 * tp / denominator


def auc_roc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """Mann-Whitney rank statistic with tie-averaged ranks; 0.5 when one class is missing."""
    actual = np.asarray(truth, dtype=bool)
    n_pos = int(actual.sum())
    n_neg = len(actual) - n_pos
    if n_pos == 0 or n_neg == 0:
        logger.debug("auc undefined for a single class", positives=n_pos, negatives=n_neg)
        return 0.5
    ranks = rankdata(np.asarray(scores, dtype=float))
    u = float(ranks[actual].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def hits_at_k(groups: Sequence[RankingGroup], k: int) -> float:
    """
    Fraction of true items ranked within the top ``k`` of their candidate
    set. A candidate tied with the true item counts as half a place above it.
    """
    if not groups:
        raise DataError("hits@k needs at least one ranking group")
    hits = 0
    for true_score, candidates in groups:
        others = np.asarray(candidates, dtype=float)
        rank = 1.0 + np.sum(others > true_score) + 0.5 * np.sum(others == true_score)
        hits += bool(rank <= k)
    return hits / len(groups)


def evaluate(
    predictions: Sequence[float],
    truth: Sequence[int],
    ks: Sequence[int] = (),
    ranking: Optional[Sequence[RankingGroup]] = None,
) -> Dict[str, float]:
    """
    Accuracy at threshold 0.5, F1 on the positive class, AUC-ROC and,
    when ranking groups are given, Hits@K for each K.
    """
    if len(truth) == 0:
        raise DataError("cannot evaluate against an empty truth set")
    if len(predictions) != len(truth):
        raise DataError(f"{len(predictions)} predictions for {len(truth)} labels")
    for p in predictions:
        if not (0.0 <= p <= 1.0) or math.isnan(p):
            raise DataError(f"prediction score {p} is outside [0, 1]")
    metrics = {
        "accuracy": accuracy(predictions, truth),
        "f1": f1_score(predictions, truth),
        "auc": auc_roc(predictions, truth),
    }
    if ranking is not None:
        for k in ks:
            metrics[f"hits@{k}"] = hits_at_k(ranking, k)
    return metrics


def multiclass_accuracy(predicted: Sequence[str], actual: Sequence[str]) -> float:
    if len(actual) == 0:
        raise DataError("cannot evaluate against an empty truth set")
    return sum(p == a for p, a in zip(predicted, actual)) / len(actual)


def aggregate(reports: Iterable[MetricReport]) -> List[AggregateRow]:
    """Mean and sample standard deviation per metric; a single run has zero deviation."""
    collected: Dict[str, List[float]] = {}
    for report in reports:
        for name, value in report.values.items():
            collected.setdefault(name, []).append(value)
    rows = []
    for name in sorted(collected):
        values = np.asarray(collected[name], dtype=float)
        stddev = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        rows.append(AggregateRow(name, float(np.mean(values)), stddev, len(values)))
    return rows


def write_aggregate(rows: Sequence[AggregateRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["metric", "mean", "stddev", "n"])
        for row in rows:
            writer.writerow([row.metric, repr(row.mean), repr(row.stddev), row.n])
