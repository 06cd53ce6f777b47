"""Evaluation metrics computed from scratch so they stay oracle-checkable."""

from __future__ import annotations

import numpy as np

from ..errors import MetricError


def _check_binary(y: np.ndarray) -> None:
    classes = set(np.unique(y).tolist())
    if not classes <= {0, 1}:
        raise MetricError(f"labels must be 0/1, got {sorted(classes)}")
    if len(classes) < 2:
        raise MetricError("both classes must be present")


def auc(scores, y) -> float:
    """Probability a random positive outranks a random negative; ties count 1/2.

    Computed by the rank statistic (Mann-Whitney with midranks).
    """
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y, dtype=int)
    if scores.shape != y.shape:
        raise MetricError("scores and labels must align")
    _check_binary(y)

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # midrank, 1-based
        i = j + 1

    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def brier(probs, y) -> float:
    """Mean squared error of probabilities against outcomes."""
    probs = np.asarray(probs, dtype=float)
    y = np.asarray(y, dtype=float)
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise MetricError("probabilities must lie in [0, 1]")
    return float(np.mean((probs - y) ** 2))


def accuracy_at(probs, y, threshold: float = 0.5) -> float:
    probs = np.asarray(probs, dtype=float)
    y = np.asarray(y, dtype=int)
    decisions = (probs > threshold).astype(int)
    return float(np.mean(decisions == y))
