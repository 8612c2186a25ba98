"""Experiment enumeration and execution over preloaded graph datasets.

A run covers one or more dataset directories.  Per dataset, the node
embeddings that make sense are enumerated (comment features when the
graphs carry them, Node2Vec always, plus their combination), crossed
with the models of the requested pipelines and the hyperparameter
ranges.  Each experiment trains on a graph-level split and appends one
row to the pipeline's results CSV.

Node2Vec vectors depend only on (dataset, parameters), never on the
model consuming them, so they are trained once up front and shared
across experiments.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from random import Random

import numpy as np
import torch

from .classic import CLASSIC_MODEL_NAMES, build_classic_model, train_eval_classic
from .correlation import CORRELATION_METHODS, feature_correlation, render_heatmap
from .dotgraph import MemoryGraph, preload_graphs
from .features import (
    FeatureConfigError,
    assemble_features,
    check_feature_width,
    chn_mask,
    evaluation_features,
    full_graph_features,
    labels,
)
from .gcn import GCN_MODEL_NAMES, build_model, normalized_adjacency, predict_gcn, train_gcn
from .hyperparams import HyperparamRanges
from .metrics import evaluate_predictions, imbalance_ratio
from .node2vec import Node2VecParams, train_node2vec
from .results import ResultsRecord, append_result, results_path

log = logging.getLogger(__name__)

PIPELINE_NAMES = (
    "gcn-pipeline",
    "classic-ml-pipeline",
    "feature-evaluation-pipeline",
)

TRAIN_FRACTION = 0.7


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class Experiment:
    pipeline_name: str
    subpipeline_name: str
    node_embedding: str
    dataset_dir: str
    index: int
    seed: int
    node2vec: Node2VecParams | None = None
    random_forest_n_estimators: int = 0
    random_forest_n_jobs: int = 0
    gcn_epochs: int = 0


@dataclass
class VectorSet:
    """Node2Vec vectors per graph of one dataset, plus their training cost."""

    params: Node2VecParams
    per_graph: list[dict[int, np.ndarray]]
    duration: float


@dataclass
class RunSummary:
    rows_written: int = 0
    heatmaps: list[Path] = field(default_factory=list)
    skipped_graphs: int = 0
    skipped_datasets: list[str] = field(default_factory=list)
    degenerate_runs: int = 0


def split_graphs(
    count: int, seed: int, train_fraction: float = TRAIN_FRACTION
) -> tuple[list[int], list[int]]:
    """Graph-level split; both sides are guaranteed non-empty."""
    if count < 2:
        raise PipelineError(f"need at least 2 graphs to split, have {count}")
    order = list(range(count))
    Random(seed).shuffle(order)
    cut = min(max(int(round(count * train_fraction)), 1), count - 1)
    return sorted(order[:cut]), sorted(order[cut:])


def dataset_embeddings(records: list[MemoryGraph]) -> list[str]:
    types = {r.embedding_type for r in records}
    if len(types) == 1 and None not in types:
        embedding_type = types.pop()
        return ["chunk-header-node", "node2vec", f"node2vec-{embedding_type}"]
    return ["node2vec"]


def enumerate_experiments(
    dataset_dir: str,
    records: list[MemoryGraph],
    pipelines: list[str],
    ranges: HyperparamRanges,
    seed: int,
    start_index: int = 0,
) -> list[Experiment]:
    experiments: list[Experiment] = []
    index = start_index

    def push(**kwargs) -> None:
        nonlocal index
        experiments.append(
            Experiment(dataset_dir=dataset_dir, index=index, seed=seed, **kwargs)
        )
        index += 1

    node2vec_grid = ranges.node2vec_grid(seed=seed)
    for node_embedding in dataset_embeddings(records):
        uses_node2vec = node_embedding.startswith("node2vec")
        n2v_choices: list[Node2VecParams | None] = (
            list(node2vec_grid) if uses_node2vec else [None]
        )
        for n2v in n2v_choices:
            if "classic-ml-pipeline" in pipelines:
                for model_name in CLASSIC_MODEL_NAMES:
                    trees = ranges.random_forest_trees if model_name == "random-forest" else [0]
                    for n_estimators in trees:
                        push(
                            pipeline_name="classic-ml-pipeline",
                            subpipeline_name=model_name,
                            node_embedding=node_embedding,
                            node2vec=n2v,
                            random_forest_n_estimators=n_estimators,
                            random_forest_n_jobs=-1 if model_name == "random-forest" else 0,
                        )
            if "gcn-pipeline" in pipelines:
                for model_name in GCN_MODEL_NAMES:
                    for epochs in ranges.gcn_epochs:
                        push(
                            pipeline_name="gcn-pipeline",
                            subpipeline_name=model_name,
                            node_embedding=node_embedding,
                            node2vec=n2v,
                            gcn_epochs=epochs,
                        )
    return experiments


def train_vector_sets(
    records: list[MemoryGraph],
    experiments: list[Experiment],
    quiet: bool = False,
) -> dict[Node2VecParams, VectorSet]:
    """One trained VectorSet per distinct Node2Vec configuration."""
    wanted = {e.node2vec for e in experiments if e.node2vec is not None}
    sets: dict[Node2VecParams, VectorSet] = {}
    for params in sorted(wanted, key=lambda p: (p.p, p.q, p.dimensions, p.walk_length)):
        started = time.monotonic()
        per_graph = [
            train_node2vec(record.graph, replace(params, seed=params.seed + i), quiet=quiet)
            for i, record in enumerate(records)
        ]
        sets[params] = VectorSet(
            params=params, per_graph=per_graph, duration=time.monotonic() - started
        )
    return sets


def run_experiment(
    experiment: Experiment,
    records: list[MemoryGraph],
    vectors: VectorSet | None,
) -> ResultsRecord:
    train_idx, test_idx = split_graphs(len(records), experiment.seed)
    per_graph = (lambda i: vectors.per_graph[i]) if vectors is not None else (lambda i: None)

    embed_started = time.monotonic()
    label_arrays = [labels(record) for record in records]
    if experiment.pipeline_name == "classic-ml-pipeline":
        matrices = [
            assemble_features(record, experiment.node_embedding, per_graph(i))
            for i, record in enumerate(records)
        ]
    elif experiment.pipeline_name == "gcn-pipeline":
        matrices = [
            full_graph_features(record, experiment.node_embedding, per_graph(i))
            for i, record in enumerate(records)
        ]
    else:
        raise PipelineError(f"{experiment.pipeline_name} does not produce result rows")
    width = check_feature_width(matrices)
    duration_embedding = time.monotonic() - embed_started
    if vectors is not None:
        duration_embedding += vectors.duration

    train_labels = np.concatenate([label_arrays[i] for i in train_idx])
    test_labels = np.concatenate([label_arrays[i] for i in test_idx])
    ratio, ratio_reasons = imbalance_ratio(train_labels)

    train_started = time.monotonic()
    if experiment.pipeline_name == "classic-ml-pipeline":
        model = build_classic_model(
            experiment.subpipeline_name,
            experiment.random_forest_n_estimators,
            experiment.random_forest_n_jobs,
            seed=experiment.seed,
        )
        evaluation = train_eval_classic(
            model,
            np.concatenate([matrices[i] for i in train_idx]),
            train_labels,
            np.concatenate([matrices[i] for i in test_idx]),
            test_labels,
        )
    else:
        model = build_model(experiment.subpipeline_name, width, seed=experiment.seed)
        tensors = [
            (
                torch.from_numpy(matrices[i]).float(),
                normalized_adjacency(records[i].graph, records[i].node_addresses),
                torch.from_numpy(label_arrays[i]),
                torch.from_numpy(chn_mask(records[i])),
            )
            for i in range(len(records))
        ]
        train_gcn(model, [tensors[i] for i in train_idx], epochs=experiment.gcn_epochs)
        predictions, scores = predict_gcn(
            model, [(tensors[i][0], tensors[i][1], tensors[i][3]) for i in test_idx]
        )
        evaluation = evaluate_predictions(test_labels, predictions, scores)
    duration_train_test = time.monotonic() - train_started

    return ResultsRecord(
        pipeline_name=experiment.pipeline_name,
        subpipeline_name=experiment.subpipeline_name,
        index=experiment.index,
        dataset_dir=experiment.dataset_dir,
        node_embedding=experiment.node_embedding,
        nb_input_graphs=len(records),
        nb_node_features=width,
        imbalance_ratio=ratio,
        evaluation=evaluation,
        duration_embedding=duration_embedding,
        duration_train_test=duration_train_test,
        node2vec=experiment.node2vec,
        random_forest_n_estimators=experiment.random_forest_n_estimators,
        random_forest_n_jobs=experiment.random_forest_n_jobs,
        first_gcn_training_epochs=experiment.gcn_epochs,
        degenerate_reasons=ratio_reasons,
    )


def run_feature_evaluation(
    dataset_dir: str, records: list[MemoryGraph], output_dir: Path
) -> list[Path]:
    """Correlation heatmaps over the dataset's own feature columns."""
    try:
        parts = [evaluation_features(record) for record in records]
    except FeatureConfigError as exc:
        log.warning("feature evaluation skipped for %s: %s", dataset_dir, exc)
        return []
    names = parts[0][1]
    stacked = np.concatenate([matrix for matrix, _ in parts])
    rendered = []
    stem = Path(dataset_dir).name
    for method in CORRELATION_METHODS:
        result = feature_correlation(stacked, names, method)
        if result.constant_columns:
            log.info(
                "%s: constant feature columns reported as zero correlation: %s",
                method,
                ", ".join(result.constant_columns),
            )
        rendered.append(
            render_heatmap(
                result,
                output_dir / f"{stem}_{method}_correlation.png",
                title=f"{method} correlation ({stem})",
            )
        )
    return rendered


def _execute_and_log(
    experiment: Experiment,
    records: list[MemoryGraph],
    vectors: VectorSet | None,
    output_dir: str,
) -> tuple[int, list[str]]:
    record = run_experiment(experiment, records, vectors)
    append_result(results_path(output_dir, experiment.pipeline_name), record)
    reasons = record.all_degenerate_reasons
    for reason in reasons:
        log.warning(
            "degenerate run (%s / %s / %s): %s",
            experiment.pipeline_name,
            experiment.subpipeline_name,
            experiment.node_embedding,
            reason,
        )
    return 1, reasons


def run_datasets(
    dataset_dirs: list[Path],
    pipelines: list[str],
    ranges: HyperparamRanges,
    output_dir: Path,
    graph_limit: int,
    batch: int = 1,
    seed: int = 0,
    quiet: bool = False,
) -> RunSummary:
    unknown = set(pipelines) - set(PIPELINE_NAMES)
    if unknown:
        raise PipelineError(f"unknown pipelines: {sorted(unknown)}")
    output_dir.mkdir(parents=True, exist_ok=True)

    summary = RunSummary()
    for dataset_dir in dataset_dirs:
        records, skipped = preload_graphs([dataset_dir], limit=graph_limit, quiet=quiet)
        summary.skipped_graphs += skipped
        if len(records) < 2:
            log.warning("skipping %s: %d usable graph(s)", dataset_dir, len(records))
            summary.skipped_datasets.append(str(dataset_dir))
            continue

        if "feature-evaluation-pipeline" in pipelines:
            summary.heatmaps.extend(
                run_feature_evaluation(str(dataset_dir), records, output_dir)
            )

        experiments = enumerate_experiments(
            str(dataset_dir), records, pipelines, ranges, seed
        )
        if not experiments:
            continue
        vector_sets = train_vector_sets(records, experiments, quiet=quiet)

        jobs = [
            (e, records, vector_sets.get(e.node2vec), str(output_dir)) for e in experiments
        ]
        if batch > 1:
            with ProcessPoolExecutor(max_workers=batch) as pool:
                outcomes = list(pool.map(_execute_job, jobs))
        else:
            outcomes = [_execute_job(job) for job in jobs]
        for written, reasons in outcomes:
            summary.rows_written += written
            summary.degenerate_runs += 1 if reasons else 0
    return summary


def _execute_job(job) -> tuple[int, list[str]]:
    return _execute_and_log(*job)
