"""Platt scaling with smoothed targets.

Fits sigma(a*s + b) to targets t+ = (N+ + 1)/(N+ + 2), t- = 1/(N- + 2) by
damped Newton iteration; the smoothing guarantees a finite optimum even on
separable scores.
"""

from __future__ import annotations

import numpy as np

from ..errors import CalibrationError

_MAX_ITER = 100
_TOL = 1e-8


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def platt_loss(a: float, b: float, scores: np.ndarray, targets: np.ndarray) -> float:
    z = a * scores + b
    return float(np.sum(np.logaddexp(0.0, z) - targets * z))


def smoothed_targets(y: np.ndarray) -> np.ndarray:
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    t_pos = (n_pos + 1.0) / (n_pos + 2.0)
    t_neg = 1.0 / (n_neg + 2.0)
    return np.where(y == 1, t_pos, t_neg)


def fit_platt(scores, y) -> tuple[float, float]:
    """Return (a, b) minimizing the smoothed-target logistic loss."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y, dtype=int)
    if set(np.unique(y).tolist()) != {0, 1}:
        raise CalibrationError("both classes must be present to calibrate")

    targets = smoothed_targets(y)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos

    a = 0.0
    b = float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    for _ in range(_MAX_ITER):
        p = _sigmoid(a * scores + b)
        residual = p - targets
        grad_a = float(residual @ scores)
        grad_b = float(residual.sum())
        w = p * (1.0 - p)
        h_aa = float((w * scores * scores).sum()) + 1e-12
        h_ab = float((w * scores).sum())
        h_bb = float(w.sum()) + 1e-12

        det = h_aa * h_bb - h_ab * h_ab
        if abs(det) < 1e-12:
            step_a, step_b = grad_a / h_aa, grad_b / h_bb
        else:
            step_a = (h_bb * grad_a - h_ab * grad_b) / det
            step_b = (h_aa * grad_b - h_ab * grad_a) / det

        # Backtracking keeps the loss from increasing on aggressive steps.
        current = platt_loss(a, b, scores, targets)
        scale = 1.0
        for _ in range(20):
            na, nb = a - scale * step_a, b - scale * step_b
            if platt_loss(na, nb, scores, targets) <= current + 1e-15:
                break
            scale *= 0.5
        a, b = a - scale * step_a, b - scale * step_b
        if max(abs(scale * step_a), abs(scale * step_b)) < _TOL:
            break
    return float(a), float(b)
