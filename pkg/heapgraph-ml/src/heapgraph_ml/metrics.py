"""Binary-classification metrics assembled from one confusion matrix.

Every logged number must be recomputable from the four matrix cells, so
this module is the single place they are produced.  Undefined ratios
(empty denominators) are logged as 0.0 and the run marked degenerate;
the CSV schema stays numeric either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import roc_auc_score


@dataclass
class Evaluation:
    true_positives: int
    true_negatives: int
    false_positives: int
    false_negatives: int
    auc: float
    degenerate_reasons: list[str] = field(default_factory=list)

    @property
    def sample_count(self) -> int:
        return (
            self.true_positives
            + self.true_negatives
            + self.false_positives
            + self.false_negatives
        )

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_reasons)

    def precision(self, cls: int) -> float:
        if cls == 1:
            return _ratio(self.true_positives, self.true_positives + self.false_positives)
        return _ratio(self.true_negatives, self.true_negatives + self.false_negatives)

    def recall(self, cls: int) -> float:
        if cls == 1:
            return _ratio(self.true_positives, self.true_positives + self.false_negatives)
        return _ratio(self.true_negatives, self.true_negatives + self.false_positives)

    def f1(self, cls: int) -> float:
        p = self.precision(cls)
        r = self.recall(cls)
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def support(self, cls: int) -> int:
        if cls == 1:
            return self.true_positives + self.false_negatives
        return self.true_negatives + self.false_positives


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def evaluate_predictions(
    y_true: np.ndarray, y_pred: np.ndarray, scores: np.ndarray | None
) -> Evaluation:
    """Confusion matrix + AUC; scores are positive-class scores if known."""
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))

    reasons = []
    if tp + fp == 0:
        reasons.append("no positive predictions; precision undefined, logged 0")
    if len(set(y_true.tolist())) < 2:
        reasons.append("single-class test fold; AUC undefined, logged 0")
        auc = 0.0
    elif scores is None:
        reasons.append("model provides no scores; AUC from hard labels")
        auc = float(roc_auc_score(y_true, y_pred))
    else:
        auc = float(roc_auc_score(y_true, scores))

    return Evaluation(
        true_positives=tp,
        true_negatives=tn,
        false_positives=fp,
        false_negatives=fn,
        auc=auc,
        degenerate_reasons=reasons,
    )


def imbalance_ratio(train_labels: np.ndarray) -> tuple[float, list[str]]:
    """negatives/positives over the TRAINING set; >= 1 on sane data."""
    labels = np.asarray(train_labels).astype(int)
    positives = int(np.sum(labels == 1))
    negatives = int(np.sum(labels == 0))
    if positives == 0:
        return float(negatives), ["training set has no positive samples"]
    return negatives / positives, []
