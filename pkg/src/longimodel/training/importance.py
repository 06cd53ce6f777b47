"""Permutation feature importance: metric drop under column shuffling."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .metrics import auc


def permutation_importance(
    score_fn: Callable[[np.ndarray], np.ndarray],
    X,
    y,
    feature_names: Sequence[str] | None = None,
    metric: Callable = auc,
    seed: int = 0,
    repeats: int = 5,
) -> list[tuple[str, float]]:
    """Per-feature importance = baseline metric - mean permuted metric.

    Returned sorted descending by importance; deterministic in seed.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(X.shape[1])]
    rng = np.random.default_rng(seed)
    baseline = metric(score_fn(X), y)

    results: list[tuple[str, float]] = []
    for j, name in enumerate(names):
        drops = []
        for _ in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = shuffled[rng.permutation(len(X)), j]
            drops.append(baseline - metric(score_fn(shuffled), y))
        results.append((name, float(np.mean(drops))))
    results.sort(key=lambda item: item[1], reverse=True)
    return results
