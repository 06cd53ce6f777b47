"""Logistic regression via deterministic mini-batch gradient descent.

Objective: mean logistic loss plus (l2/2)*||w||^2 (intercept unpenalized).
Per-batch gradient: (1/m) * sum((sigma(w.x + b) - y) x) + l2*w. Given a
seed, the shuffle order and therefore the fit are fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 0.0
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise DegenerateDataError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise DegenerateDataError("epochs and batch_size must be positive")
        if self.l2 < 0:
            raise DegenerateDataError("l2 must be non-negative")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_proba(X: np.ndarray, intercept: float, coef: np.ndarray) -> np.ndarray:
    return _sigmoid(X @ coef + intercept)


def loss(X: np.ndarray, y: np.ndarray, intercept: float, coef: np.ndarray, l2: float) -> float:
    z = X @ coef + intercept
    # log(1 + exp(z)) - y*z, computed stably
    per_sample = np.logaddexp(0.0, z) - y * z
    return float(per_sample.mean() + 0.5 * l2 * float(coef @ coef))


def loss_gradient(
    X: np.ndarray, y: np.ndarray, intercept: float, coef: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """(d/db, d/dw) of the batch objective."""
    residual = predict_proba(X, intercept, coef) - y
    grad_w = X.T @ residual / len(y) + l2 * coef
    grad_b = float(residual.mean())
    return grad_b, grad_w


def train_logreg(X, y, hp: Hyperparameters) -> tuple[float, np.ndarray]:
    """Fit and return (intercept, coefficients)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 2:
        raise DegenerateDataError("need at least 2 samples")
    classes = set(np.unique(y).tolist())
    if classes != {0.0, 1.0}:
        raise DegenerateDataError(f"labels must contain both classes, got {sorted(classes)}")

    rng = np.random.default_rng(hp.seed)
    intercept = 0.0
    coef = np.zeros(d)
    batch = min(hp.batch_size, n)
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            grad_b, grad_w = loss_gradient(X[idx], y[idx], intercept, coef, hp.l2)
            intercept -= hp.learning_rate * grad_b
            coef -= hp.learning_rate * grad_w
    return intercept, coef
