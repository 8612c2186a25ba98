"""Classic sklearn models behind one train/eval entry point."""

import numpy as np
import pytest
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression, SGDClassifier

from heapgraph_ml.classic import (
    CLASSIC_MODEL_NAMES,
    build_classic_model,
    train_eval_classic,
)


def separable_data(n=60, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    x = rng.normal(size=(n, 4)) + y[:, None] * 6.0
    return x, y


def test_builders_return_configured_models():
    rf = build_classic_model("random-forest", n_estimators=42, n_jobs=2, seed=7)
    assert isinstance(rf, RandomForestClassifier)
    assert rf.n_estimators == 42 and rf.n_jobs == 2 and rf.random_state == 7

    lr = build_classic_model("logistic-regression", 0, 0, seed=7)
    assert isinstance(lr, LogisticRegression)

    sgd = build_classic_model("sgd-classifier", 0, 0, seed=7)
    assert isinstance(sgd, SGDClassifier)
    assert not hasattr(sgd, "predict_proba")  # must go through decision_function


def test_unknown_model_rejected():
    with pytest.raises(ValueError, match="unknown classic model"):
        build_classic_model("svm", 0, 0)


@pytest.mark.parametrize("name", CLASSIC_MODEL_NAMES)
def test_separable_data_is_learned(name):
    x_train, y_train = separable_data(seed=1)
    x_test, y_test = separable_data(seed=2)
    model = build_classic_model(name, n_estimators=20, n_jobs=1, seed=0)
    result = train_eval_classic(model, x_train, y_train, x_test, y_test)
    # SGD's default schedule may leave a couple of boundary misses even
    # here; the ranking must still be perfect.
    assert result.false_positives + result.false_negatives <= 2
    assert result.auc == 1.0
    assert not result.degenerate


def test_sgd_scores_come_from_margins():
    x_train, y_train = separable_data(seed=3)
    x_test, y_test = separable_data(seed=4)
    model = build_classic_model("sgd-classifier", 0, 0, seed=0)
    result = train_eval_classic(model, x_train, y_train, x_test, y_test)
    assert result.auc == 1.0  # margins rank perfectly even without probabilities
    assert all("no scores" not in reason for reason in result.degenerate_reasons)


def test_single_class_training_degenerates_gracefully():
    x_train = np.zeros((10, 3))
    y_train = np.zeros(10, dtype=int)
    x_test, y_test = separable_data(n=20, seed=5)
    model = build_classic_model("logistic-regression", 0, 0, seed=0)
    result = train_eval_classic(model, x_train, y_train, x_test, y_test)
    assert result.true_positives == 0 and result.false_positives == 0
    assert any("single-class training" in r for r in result.degenerate_reasons)
