"""Acceptance gate: one test per shipping criterion.

Each test states its criterion, runs it at the required scale, and
asserts the stated tolerance and time budget.  Run with -v to get one
pass/fail line per criterion.
"""

import csv
import json
import time

import pytest
import torch

from heapgraph_ml.cli import main
from heapgraph_ml.dotgraph import preload_graphs
from heapgraph_ml.features import labels
from heapgraph_ml.gcn import GCN_MODEL_NAMES, build_model, normalized_adjacency
from heapgraph_ml.hyperparams import load_hyperparams
from heapgraph_ml.pipelines import run_datasets, split_graphs
from heapgraph_ml.results import RESULTS_HEADERS

from conftest import write_dataset

TINY_HP = {
    "node2vec_dimensions_range": [8],
    "node2vec_walk_length_range": [5],
    "node2vec_num_walks_range": [4],
    "node2vec_window_range": [3],
    "node2vec_batch_words_range": [8],
    "gcn_training_epochs_range": [3],
    "randomforest_trees_range": [10],
}


def tiny_ranges(tmp_path):
    path = tmp_path / "hyperparams.json"
    path.write_text(json.dumps(TINY_HP))
    return path, load_hyperparams(path)


def read_rows(csv_path):
    with csv_path.open() as handle:
        return list(csv.DictReader(handle))


def test_s1_metric_identities_hold_on_every_logged_row(tmp_path):
    """Criterion: precision/recall/F1/confusion consistency to 1e-9 and
    imbalance_ratio equal to the training labels, over >= 50 real runs."""
    started = time.monotonic()
    _, ranges = tiny_ranges(tmp_path)
    out = tmp_path / "out"
    datasets = []
    for i in range(6):
        dataset = tmp_path / f"ds{i}"
        write_dataset(dataset, n_graphs=4, n_chunks=5 + i)
        datasets.append(dataset)

    summary = run_datasets(
        dataset_dirs=datasets,
        pipelines=["classic-ml-pipeline"],
        ranges=ranges,
        output_dir=out,
        graph_limit=4,
        seed=0,
        quiet=True,
    )
    assert summary.rows_written >= 50

    expected_ratio = {}
    for dataset in datasets:
        records, _ = preload_graphs([dataset], quiet=True)
        train_idx, _ = split_graphs(len(records), seed=0)
        train = [v for i in train_idx for v in labels(records[i]).tolist()]
        positives = sum(train)
        negatives = len(train) - positives
        expected_ratio[str(dataset)] = (
            negatives / positives if positives else float(negatives)
        )

    rows = read_rows(out / "classic_ml_pipeline_results.csv")
    assert len(rows) == summary.rows_written
    for row in rows:
        tp = int(row["true_positives"])
        tn = int(row["true_negatives"])
        fp = int(row["false_positives"])
        fn = int(row["false_negatives"])
        for cls, (hit, miss_p, miss_r) in {1: (tp, fp, fn), 0: (tn, fn, fp)}.items():
            precision = hit / (hit + miss_p) if hit + miss_p else 0.0
            recall = hit / (hit + miss_r) if hit + miss_r else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            assert abs(float(row[f"precision_class_{cls}"]) - precision) < 1e-9
            assert abs(float(row[f"recall_class_{cls}"]) - recall) < 1e-9
            assert abs(float(row[f"f1_score_class_{cls}"]) - f1) < 1e-9
        assert int(row["support_class_1"]) == tp + fn
        assert int(row["support_class_0"]) == tn + fp
        assert 0.0 <= float(row["AUC"]) <= 1.0
        assert (
            abs(float(row["imbalance_ratio"]) - expected_ratio[row["input_mem2graph_dataset_dir_path"]])
            < 1e-9
        )
    assert time.monotonic() - started < 120


def test_s2_gcn_shape_and_contract_suite(tmp_path):
    """Criterion: all five architectures emit (num_nodes, 2) on variable
    sizes; dropout randomness in train mode only; advanced-gcn widths
    are 32/64/128 conv and 256/128/64 FC. Under 2 minutes."""
    import networkx as nx

    started = time.monotonic()
    for name in GCN_MODEL_NAMES:
        for n_nodes, width in ((5, 3), (31, 37), (64, 165)):
            graph = nx.gnp_random_graph(n_nodes, 0.2, seed=n_nodes, directed=True)
            adj = normalized_adjacency(graph, sorted(graph.nodes))
            x = torch.randn(n_nodes, width, generator=torch.Generator().manual_seed(1))
            model = build_model(name, in_features=width, seed=0)
            model.eval()
            out = model(x, adj)
            assert out.shape == (n_nodes, 2), name
            assert torch.equal(out, model(x, adj)), f"{name} eval must be deterministic"

    for name, stochastic in (
        ("very-simple-gcn", False),
        ("simple-gcn", False),
        ("first-gcn", False),
        ("gcn-with-dropout", True),
        ("advanced-gcn", True),
    ):
        graph = nx.gnp_random_graph(24, 0.3, seed=9, directed=True)
        adj = normalized_adjacency(graph, sorted(graph.nodes))
        x = torch.randn(24, 12, generator=torch.Generator().manual_seed(2))
        model = build_model(name, in_features=12, seed=0)
        model.train()
        torch.manual_seed(3)
        differs = not torch.allclose(model(x, adj), model(x, adj))
        assert differs == stochastic, name

    model = build_model("advanced-gcn", in_features=37, seed=0)
    assert [conv.linear.out_features for conv in model.convs] == [32, 64, 128]
    assert [fc.out_features for fc in model.fcs] == [256, 128, 64]
    assert time.monotonic() - started < 120


def test_s3_end_to_end_smoke_all_three_pipelines(tmp_path, capsys):
    """Criterion: 4 synthetic graphs through all three pipelines produce
    a schema-complete results CSV and three heatmaps. Under 5 minutes."""
    started = time.monotonic()
    dataset = tmp_path / "dataset"
    write_dataset(dataset, n_graphs=4, n_chunks=8)
    hp_path, _ = tiny_ranges(tmp_path)
    out = tmp_path / "results"

    rc = main(
        [
            "-i", str(dataset),
            "-p", "gcn-pipeline", "classic-ml-pipeline", "feature-evaluation-pipeline",
            "-n", "4",
            "-o", str(out),
            "--hyperparams", str(hp_path),
            "-q",
        ]
    )
    assert rc == 0
    assert "wrote 24 result row(s)" in capsys.readouterr().out

    classic = read_rows(out / "classic_ml_pipeline_results.csv")
    gcn = read_rows(out / "gcn_pipeline_results.csv")
    assert len(classic) == 9
    assert len(gcn) == 15
    for row in classic + gcn:
        assert list(row) == RESULTS_HEADERS
        assert row["nb_input_graphs"] == "4"
        assert all(row[column] != "" for column in RESULTS_HEADERS)

    heatmaps = sorted(out.glob("*.png"))
    assert len(heatmaps) == 3
    assert {p.name for p in heatmaps} == {
        "dataset_pearson_correlation.png",
        "dataset_spearman_correlation.png",
        "dataset_kendall_correlation.png",
    }
    assert all(p.stat().st_size > 1000 for p in heatmaps)
    assert time.monotonic() - started < 300
