"""Metric math against sklearn, degenerate handling, CSV schema and locking."""

import csv

import numpy as np
import pytest
from sklearn.metrics import (
    confusion_matrix,
    precision_recall_fscore_support,
    roc_auc_score,
)

from heapgraph_ml.metrics import Evaluation, evaluate_predictions, imbalance_ratio
from heapgraph_ml.node2vec import Node2VecParams
from heapgraph_ml.results import (
    RESULTS_HEADERS,
    ResultsRecord,
    SchemaMismatch,
    append_result,
    host_info,
    results_path,
)


def test_matches_sklearn_on_many_random_splits():
    rng = np.random.default_rng(11)
    for _ in range(60):
        n = int(rng.integers(10, 80))
        y_true = rng.integers(0, 2, size=n)
        if len(set(y_true.tolist())) < 2:
            continue
        y_pred = rng.integers(0, 2, size=n)
        scores = rng.random(n)
        ours = evaluate_predictions(y_true, y_pred, scores)

        cells = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
        assert (ours.true_negatives, ours.false_positives,
                ours.false_negatives, ours.true_positives) == tuple(cells)
        p, r, f, s = precision_recall_fscore_support(
            y_true, y_pred, labels=[0, 1], zero_division=0
        )
        for cls in (0, 1):
            assert ours.precision(cls) == pytest.approx(p[cls], abs=1e-9)
            assert ours.recall(cls) == pytest.approx(r[cls], abs=1e-9)
            assert ours.f1(cls) == pytest.approx(f[cls], abs=1e-9)
            assert ours.support(cls) == s[cls]
        assert ours.auc == pytest.approx(roc_auc_score(y_true, scores), abs=1e-9)
        assert ours.sample_count == n


def test_no_positive_predictions_is_degenerate():
    result = evaluate_predictions(
        np.array([0, 1, 0, 1]), np.array([0, 0, 0, 0]), np.array([0.1, 0.2, 0.3, 0.4])
    )
    assert result.precision(1) == 0.0
    assert result.recall(1) == 0.0
    assert any("no positive predictions" in r for r in result.degenerate_reasons)
    assert result.degenerate


def test_single_class_test_fold_zeroes_auc():
    result = evaluate_predictions(
        np.array([1, 1, 1]), np.array([1, 0, 1]), np.array([0.9, 0.2, 0.8])
    )
    assert result.auc == 0.0
    assert any("AUC undefined" in r for r in result.degenerate_reasons)


def test_missing_scores_fall_back_to_hard_labels():
    y_true = np.array([0, 1, 0, 1, 1])
    y_pred = np.array([0, 1, 1, 1, 0])
    result = evaluate_predictions(y_true, y_pred, None)
    assert result.auc == pytest.approx(roc_auc_score(y_true, y_pred))
    assert any("no scores" in r for r in result.degenerate_reasons)


def test_imbalance_ratio():
    ratio, reasons = imbalance_ratio(np.array([0] * 9 + [1] * 3))
    assert ratio == 3.0 and reasons == []
    ratio, reasons = imbalance_ratio(np.array([0, 0, 0, 0]))
    assert ratio == 4.0
    assert reasons == ["training set has no positive samples"]


def make_record(index=0, reasons=(), with_n2v=True) -> ResultsRecord:
    return ResultsRecord(
        pipeline_name="classic-ml-pipeline",
        subpipeline_name="sgd-classifier",
        index=index,
        dataset_dir="/data/x",
        node_embedding="chunk-header-node",
        nb_input_graphs=4,
        nb_node_features=37,
        imbalance_ratio=12.5,
        evaluation=Evaluation(3, 40, 2, 1, 0.875, list(reasons)),
        duration_embedding=0.5,
        duration_train_test=0.25,
        node2vec=Node2VecParams() if with_n2v else None,
    )


def test_row_covers_every_header_exactly():
    row = make_record().as_row()
    assert list(row) == RESULTS_HEADERS
    assert row["precision_class_1"] == pytest.approx(3 / 5)
    assert row["recall_class_1"] == pytest.approx(3 / 4)
    assert row["support_class_0"] == 42
    assert row["true_positives"] == 3
    assert row["AUC"] == 0.875
    assert row["imbalance_ratio"] == 12.5
    assert row["nb_node_features"] == 37


def test_missing_node2vec_logs_zeroes():
    row = make_record(with_n2v=False).as_row()
    assert row["node2vec_dimensions"] == 0
    assert row["node2vec_p"] == 0
    assert row["first_gcn_training_epochs"] == 0


def test_degenerate_reasons_stay_out_of_the_csv():
    record = make_record(reasons=["no positive predictions"])
    row = record.as_row()
    assert "degenerate" not in " ".join(row)
    assert record.all_degenerate_reasons == ["no positive predictions"]


def test_append_creates_header_then_appends(tmp_path):
    path = results_path(tmp_path, "classic-ml-pipeline")
    assert path.name == "classic_ml_pipeline_results.csv"
    append_result(path, make_record(index=0))
    append_result(path, make_record(index=1))
    with path.open() as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 2
    assert [r["index"] for r in rows] == ["0", "1"]
    assert set(rows[0]) == set(RESULTS_HEADERS)
    assert float(rows[0]["AUC"]) == 0.875


def test_identical_configs_append_two_rows(tmp_path):
    path = results_path(tmp_path, "classic-ml-pipeline")
    record = make_record(index=5)
    append_result(path, record)
    append_result(path, record)
    with path.open() as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 2  # append-only log, never deduplicated


def test_round_trip_preserves_numeric_values(tmp_path):
    path = results_path(tmp_path, "classic-ml-pipeline")
    record = make_record(index=3)
    written = record.as_row()
    append_result(path, record)
    with path.open() as handle:
        read_back = next(iter(csv.DictReader(handle)))
    for column in RESULTS_HEADERS:
        original = written[column]
        if isinstance(original, bool) or isinstance(original, str):
            assert read_back[column] == str(original)
        elif isinstance(original, int):
            assert int(read_back[column]) == original
        elif isinstance(original, float):
            assert float(read_back[column]) == original


def test_append_refuses_foreign_schema(tmp_path):
    path = tmp_path / "classic_ml_pipeline_results.csv"
    path.write_text("alpha,beta\n1,2\n")
    with pytest.raises(SchemaMismatch):
        append_result(path, make_record())


def test_host_info_populated():
    info = host_info()
    for key in ("system", "node_name", "release", "machine", "total_cores"):
        assert key in info and info[key] not in ("", None)
