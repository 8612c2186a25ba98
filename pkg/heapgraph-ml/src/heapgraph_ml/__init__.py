"""Machine learning on exported memory graphs.

Consumes .gv graph files produced by the heapgraph exporter and trains
node classifiers (classic models and graph convolutional networks) to
recognise key-holding chunks, plus a feature correlation report.
"""

from .dotgraph import GraphFormatError, MemoryGraph, load_graph_file, preload_graphs
from .features import FeatureConfigError, assemble_features, evaluation_features, labels
from .hyperparams import DEFAULT_RANGES, HyperparamError, HyperparamRanges, load_hyperparams
from .metrics import Evaluation, evaluate_predictions, imbalance_ratio
from .node2vec import Node2VecParams, train_node2vec
from .pipelines import (
    PIPELINE_NAMES,
    Experiment,
    PipelineError,
    RunSummary,
    enumerate_experiments,
    run_datasets,
    run_experiment,
    split_graphs,
)
from .results import RESULTS_HEADERS, ResultsRecord, SchemaMismatch, append_result

__all__ = [
    "DEFAULT_RANGES",
    "Evaluation",
    "Experiment",
    "FeatureConfigError",
    "GraphFormatError",
    "HyperparamError",
    "HyperparamRanges",
    "MemoryGraph",
    "Node2VecParams",
    "PIPELINE_NAMES",
    "PipelineError",
    "RESULTS_HEADERS",
    "ResultsRecord",
    "RunSummary",
    "SchemaMismatch",
    "append_result",
    "assemble_features",
    "enumerate_experiments",
    "evaluate_predictions",
    "evaluation_features",
    "imbalance_ratio",
    "labels",
    "load_graph_file",
    "load_hyperparams",
    "preload_graphs",
    "run_datasets",
    "run_experiment",
    "split_graphs",
    "train_node2vec",
]
