"""Clustering metrics: GT/prediction alignment, mAA, CL, and the combined
harmonic-mean score, with multi-dataset aggregation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Clustering, EvalReport
from .errors import EmptyInput


def _intersections(gt: Clustering, pred: Clustering) -> np.ndarray:
    w = np.zeros((len(gt.clusters), len(pred.clusters)), dtype=np.int64)
    for i, s in enumerate(gt.clusters):
        for j, c in enumerate(pred.clusters):
            w[i, j] = len(s & c)
    return w


def _max_weight(w: np.ndarray, rows: list[int], cols: list[int]) -> int:
    """Maximum total intersection over injective partial assignments of the
    given rows to the given columns."""
    if not rows or not cols:
        return 0
    sub = w[np.ix_(rows, cols)]
    ri, ci = linear_sum_assignment(sub, maximize=True)
    return int(sub[ri, ci].sum())


def align_clusters(gt: Clustering, pred: Clustering) -> dict[int, int | None]:
    """Injective partial assignment of GT clusters to predicted clusters
    maximizing total intersection. Only positive-intersection pairings are
    assignable; among maximum-weight assignments the lexicographically
    smallest (by GT index, then predicted index, unassigned last) is chosen."""
    w = _intersections(gt, pred)
    n_gt, n_pred = w.shape
    total_best = _max_weight(w, list(range(n_gt)), list(range(n_pred)))

    alignment: dict[int, int | None] = {}
    used: set[int] = set()
    fixed_weight = 0
    for i in range(n_gt):
        remaining_rows = list(range(i + 1, n_gt))
        chosen: int | None = None
        for j in range(n_pred):
            if j in used or w[i, j] <= 0:
                continue
            rest_cols = [c for c in range(n_pred) if c not in used and c != j]
            if fixed_weight + w[i, j] + _max_weight(w, remaining_rows, rest_cols) == total_best:
                chosen = j
                break
        if chosen is None:
            # leaving i unassigned must still achieve the optimum
            alignment[i] = None
        else:
            alignment[i] = chosen
            used.add(chosen)
            fixed_weight += int(w[i, chosen])
    return alignment


def compute_maa(gt: Clustering, pred: Clustering,
                alignment: dict[int, int | None]) -> tuple[float, list[float]]:
    """Per-GT-cluster recall (fraction of the cluster recovered by its aligned
    predicted cluster) and its unweighted mean."""
    if not gt.clusters:
        return 0.0, []
    accuracies = []
    for i, s in enumerate(gt.clusters):
        j = alignment.get(i)
        if j is None:
            accuracies.append(0.0)
        else:
            accuracies.append(len(s & pred.clusters[j]) / len(s))
    return float(np.mean(accuracies)), accuracies


def compute_cl(gt: Clustering, pred: Clustering,
               alignment: dict[int, int | None]) -> float:
    """Precision-like purity: total intersection over the total size of the
    aligned predicted clusters."""
    numerator = 0
    denominator = 0
    for i, s in enumerate(gt.clusters):
        j = alignment.get(i)
        if j is None:
            continue
        numerator += len(s & pred.clusters[j])
        denominator += len(pred.clusters[j])
    if denominator == 0:
        return 0.0
    return numerator / denominator


def final_score(maa: float, cl: float) -> float:
    """Harmonic mean of the two metrics; zero when both are zero."""
    if maa + cl == 0:
        return 0.0
    return 2.0 * maa * cl / (maa + cl)


def evaluate_dataset(gt: Clustering, pred: Clustering) -> EvalReport:
    alignment = align_clusters(gt, pred)
    maa, per_cluster = compute_maa(gt, pred, alignment)
    cl = compute_cl(gt, pred, alignment)
    return EvalReport(maa=maa, cl=cl, score=final_score(maa, cl),
                      per_cluster_accuracy=per_cluster, alignment=alignment)


def evaluate_datasets(per_dataset: Sequence[tuple[Clustering, Clustering]]
                      ) -> tuple[list[EvalReport], EvalReport]:
    """Score each (gt, pred) dataset and aggregate by unweighted means."""
    if not per_dataset:
        raise EmptyInput("no datasets to evaluate")
    reports = [evaluate_dataset(gt, pred) for gt, pred in per_dataset]
    aggregate = EvalReport(
        maa=float(np.mean([r.maa for r in reports])),
        cl=float(np.mean([r.cl for r in reports])),
        score=float(np.mean([r.score for r in reports])),
    )
    return reports, aggregate


def write_metrics(dataset_ids: Sequence[str], reports: Sequence[EvalReport],
                  aggregate: EvalReport, path: str | Path) -> None:
    doc = {
        "datasets": [
            {
                "dataset_id": dataset_id,
                "maa": r.maa,
                "cl": r.cl,
                "score": r.score,
                "per_cluster_accuracy": r.per_cluster_accuracy,
            }
            for dataset_id, r in zip(dataset_ids, reports)
        ],
        "aggregate": {"maa": aggregate.maa, "cl": aggregate.cl,
                      "score": aggregate.score},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
