"""Training pipeline: logistic regression, calibration, metrics, explanations."""

from .calibration import fit_platt
from .importance import permutation_importance
from .logreg import Hyperparameters, loss, loss_gradient, predict_proba, train_logreg
from .metrics import accuracy_at, auc, brier
from .pipeline import EvalReport, PipelineResult, TrainConfig, assemble_matrix, run_pipeline

__all__ = [
    "EvalReport",
    "Hyperparameters",
    "PipelineResult",
    "TrainConfig",
    "accuracy_at",
    "assemble_matrix",
    "auc",
    "brier",
    "fit_platt",
    "loss",
    "loss_gradient",
    "permutation_importance",
    "predict_proba",
    "run_pipeline",
    "train_logreg",
]
