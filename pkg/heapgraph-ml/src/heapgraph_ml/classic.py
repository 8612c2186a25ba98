"""Baseline scikit-learn classifiers over per-node feature matrices."""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression, SGDClassifier

from .metrics import Evaluation, evaluate_predictions

CLASSIC_MODEL_NAMES = ("random-forest", "logistic-regression", "sgd-classifier")


def build_classic_model(name: str, n_estimators: int, n_jobs: int, seed: int = 0):
    if name == "random-forest":
        return RandomForestClassifier(
            n_estimators=n_estimators, n_jobs=n_jobs, random_state=seed
        )
    if name == "logistic-regression":
        return LogisticRegression(random_state=seed)
    if name == "sgd-classifier":
        return SGDClassifier(random_state=seed)
    raise ValueError(f"unknown classic model {name!r}")


def train_eval_classic(
    model,
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
) -> Evaluation:
    """Fit, predict, and score; no rebalancing of any kind is applied."""
    if len(set(train_y.tolist())) < 2:
        # a fit would fail outright; log an all-negative prediction instead
        predictions = np.full(len(test_y), int(train_y[0]) if len(train_y) else 0)
        evaluation = evaluate_predictions(test_y, predictions, None)
        evaluation.degenerate_reasons.append("single-class training labels; model not fitted")
        return evaluation

    model.fit(train_x, train_y)
    predictions = model.predict(test_x)
    if hasattr(model, "predict_proba"):
        scores = model.predict_proba(test_x)[:, 1]
    elif hasattr(model, "decision_function"):
        # hinge-loss SGD: margins still rank correctly for AUC
        scores = model.decision_function(test_x)
    else:
        scores = None
    return evaluate_predictions(test_y, predictions, scores)
