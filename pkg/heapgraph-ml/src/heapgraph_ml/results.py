"""Append-only results CSV with a fixed header set.

One row per experiment.  The header list below is a compatibility
contract with downstream analysis scripts: append-only files, exact
column names, no dedup of repeated configs.  Writes go through a file
lock so parallel experiment processes can share one file.
"""

from __future__ import annotations

import csv
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import psutil
from filelock import FileLock

from .metrics import Evaluation
from .node2vec import Node2VecParams

RESULTS_HEADERS = [
    "system",
    "node_name",
    "release",
    "version",
    "machine",
    "processor",
    "physical_cores",
    "total_cores",
    "total_memory",
    "available_memory",
    "start_time",
    "nb_input_graphs",
    "duration_embedding",
    "subpipeline_name",
    "index",
    "pipeline_name",
    "input_mem2graph_dataset_dir_path",
    "node_embedding",
    "node2vec_dimensions",
    "node2vec_walk_length",
    "node2vec_num_walks",
    "node2vec_p",
    "node2vec_q",
    "node2vec_window",
    "node2vec_batch_words",
    "node2vec_workers",
    "node2vec_epochs",
    "random_forest_n_estimators",
    "random_forest_n_jobs",
    "imbalance_ratio",
    "precision_class_0",
    "precision_class_1",
    "recall_class_0",
    "recall_class_1",
    "f1_score_class_0",
    "f1_score_class_1",
    "support_class_0",
    "support_class_1",
    "true_positives",
    "true_negatives",
    "false_positives",
    "false_negatives",
    "AUC",
    "duration_train_test",
    "nb_node_features",
    "first_gcn_training_epochs",
]


class SchemaMismatch(ValueError):
    pass


def host_info() -> dict[str, object]:
    memory = psutil.virtual_memory()
    return {
        "system": platform.system(),
        "node_name": platform.node(),
        "release": platform.release(),
        "version": platform.version(),
        "machine": platform.machine(),
        "processor": platform.processor(),
        "physical_cores": psutil.cpu_count(logical=False) or 0,
        "total_cores": psutil.cpu_count() or 0,
        "total_memory": memory.total,
        "available_memory": memory.available,
    }


@dataclass
class ResultsRecord:
    """One experiment run, ready for CSV append."""

    pipeline_name: str
    subpipeline_name: str
    index: int
    dataset_dir: str
    node_embedding: str
    nb_input_graphs: int
    nb_node_features: int
    imbalance_ratio: float
    evaluation: Evaluation
    duration_embedding: float
    duration_train_test: float
    node2vec: Node2VecParams | None = None
    random_forest_n_estimators: int = 0
    random_forest_n_jobs: int = 0
    first_gcn_training_epochs: int = 0
    start_time: float = field(default_factory=time.time)
    degenerate_reasons: list[str] = field(default_factory=list)

    def as_row(self) -> dict[str, object]:
        row: dict[str, object] = dict(host_info())
        row.update(
            {
                "start_time": self.start_time,
                "nb_input_graphs": self.nb_input_graphs,
                "duration_embedding": self.duration_embedding,
                "subpipeline_name": self.subpipeline_name,
                "index": self.index,
                "pipeline_name": self.pipeline_name,
                "input_mem2graph_dataset_dir_path": self.dataset_dir,
                "node_embedding": self.node_embedding,
            }
        )
        n2v = self.node2vec.as_row() if self.node2vec else {
            name: 0
            for name in RESULTS_HEADERS
            if name.startswith("node2vec_")
        }
        row.update(n2v)
        row.update(
            {
                "random_forest_n_estimators": self.random_forest_n_estimators,
                "random_forest_n_jobs": self.random_forest_n_jobs,
                "imbalance_ratio": self.imbalance_ratio,
                "precision_class_0": self.evaluation.precision(0),
                "precision_class_1": self.evaluation.precision(1),
                "recall_class_0": self.evaluation.recall(0),
                "recall_class_1": self.evaluation.recall(1),
                "f1_score_class_0": self.evaluation.f1(0),
                "f1_score_class_1": self.evaluation.f1(1),
                "support_class_0": self.evaluation.support(0),
                "support_class_1": self.evaluation.support(1),
                "true_positives": self.evaluation.true_positives,
                "true_negatives": self.evaluation.true_negatives,
                "false_positives": self.evaluation.false_positives,
                "false_negatives": self.evaluation.false_negatives,
                "AUC": self.evaluation.auc,
                "duration_train_test": self.duration_train_test,
                "nb_node_features": self.nb_node_features,
                "first_gcn_training_epochs": self.first_gcn_training_epochs,
            }
        )
        missing = set(RESULTS_HEADERS) - set(row)
        if missing:
            raise SchemaMismatch(f"record misses columns: {sorted(missing)}")
        return {name: row[name] for name in RESULTS_HEADERS}

    @property
    def all_degenerate_reasons(self) -> list[str]:
        # degeneracy travels in the log, never as a CSV column
        return self.degenerate_reasons + self.evaluation.degenerate_reasons


def results_path(output_dir: Path | str, pipeline_name: str) -> Path:
    stem = pipeline_name.replace("-", "_")
    return Path(output_dir) / f"{stem}_results.csv"


def append_result(csv_path: Path | str, record: ResultsRecord) -> None:
    csv_path = Path(csv_path)
    row = record.as_row()
    lock = FileLock(str(csv_path) + ".lock")
    with lock:
        exists = csv_path.exists()
        if exists:
            with csv_path.open("r", newline="") as handle:
                header = next(csv.reader(handle), None)
            if header != RESULTS_HEADERS:
                raise SchemaMismatch(f"{csv_path} header does not match the schema")
        with csv_path.open("a", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=RESULTS_HEADERS)
            if not exists:
                writer.writeheader()
            writer.writerow(row)
