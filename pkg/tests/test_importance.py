"""Permutation importance: null features, planted features, determinism."""

import numpy as np
import pytest

from longimodel.training.importance import permutation_importance
from longimodel.training.logreg import predict_proba


def make_model(coef):
    coef = np.asarray(coef, dtype=float)
    return lambda X: predict_proba(np.asarray(X), 0.0, coef)


def planted_dataset(n=400, seed=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 2] + 0.3 * rng.normal(size=n) > 0).astype(int)
    return X, y


def test_zero_coefficient_feature_has_zero_importance():
    X, y = planted_dataset()
    score_fn = make_model([0.0, 0.0, 3.0, 0.0])
    report = dict(permutation_importance(score_fn, X, y, seed=1))
    for name in ("f0", "f1", "f3"):
        assert abs(report[name]) <= 0.02


def test_planted_feature_ranks_first():
    X, y = planted_dataset()
    score_fn = make_model([0.1, -0.1, 3.0, 0.05])
    report = permutation_importance(score_fn, X, y, feature_names=["a", "b", "planted", "c"], seed=2)
    assert report[0][0] == "planted"
    assert report[0][1] > report[1][1]


def test_same_seed_identical_report():
    X, y = planted_dataset()
    score_fn = make_model([0.2, 0.0, 2.0, -0.3])
    a = permutation_importance(score_fn, X, y, seed=7, repeats=5)
    b = permutation_importance(score_fn, X, y, seed=7, repeats=5)
    assert a == b


def test_report_sorted_descending():
    X, y = planted_dataset()
    score_fn = make_model([0.5, 0.0, 2.0, -0.3])
    report = permutation_importance(score_fn, X, y, seed=3)
    values = [v for _, v in report]
    assert values == sorted(values, reverse=True)


def test_metric_errors_propagate():
    X, _ = planted_dataset()
    y = np.ones(len(X), dtype=int)  # single class: AUC undefined
    from longimodel.errors import MetricError

    with pytest.raises(MetricError):
        permutation_importance(make_model([1.0, 0, 0, 0]), X, y, seed=1)
