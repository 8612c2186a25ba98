"""Hyperparameter ranges loaded from hyperparams.json.

The file holds one list per tunable parameter; an experiment sweep is
the cartesian product of the lists.  Key names are a contract with
existing tuning files.  The built-in defaults are single-value ranges
so a bare run performs one experiment per model and embedding.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

from .node2vec import Node2VecParams

HYPERPARAM_KEYS = (
    "node2vec_dimensions_range",
    "node2vec_walk_length_range",
    "node2vec_num_walks_range",
    "node2vec_p_range",
    "node2vec_q_range",
    "node2vec_window_range",
    "node2vec_batch_words_range",
    "node2vec_workers_range",
    "randomforest_trees_range",
    "gcn_training_epochs_range",
)

DEFAULT_RANGES: dict[str, list] = {
    "node2vec_dimensions_range": [128],
    "node2vec_walk_length_range": [16],
    "node2vec_num_walks_range": [50],
    "node2vec_p_range": [1.0],
    "node2vec_q_range": [1.0],
    "node2vec_window_range": [10],
    "node2vec_batch_words_range": [8],
    "node2vec_workers_range": [16],
    "randomforest_trees_range": [100],
    "gcn_training_epochs_range": [20],
}


class HyperparamError(ValueError):
    pass


@dataclass(frozen=True)
class HyperparamRanges:
    ranges: dict[str, list]

    def node2vec_grid(self, seed: int = 0) -> list[Node2VecParams]:
        r = self.ranges
        grid = itertools.product(
            r["node2vec_dimensions_range"],
            r["node2vec_walk_length_range"],
            r["node2vec_num_walks_range"],
            r["node2vec_p_range"],
            r["node2vec_q_range"],
            r["node2vec_window_range"],
            r["node2vec_batch_words_range"],
            r["node2vec_workers_range"],
        )
        return [
            Node2VecParams(
                dimensions=dims,
                walk_length=walk,
                num_walks=walks,
                p=p,
                q=q,
                window=window,
                batch_words=batch,
                workers=workers,
                seed=seed,
            )
            for dims, walk, walks, p, q, window, batch, workers in grid
        ]

    @property
    def random_forest_trees(self) -> list[int]:
        return list(self.ranges["randomforest_trees_range"])

    @property
    def gcn_epochs(self) -> list[int]:
        return list(self.ranges["gcn_training_epochs_range"])


def load_hyperparams(path: Path | str | None) -> HyperparamRanges:
    ranges = dict(DEFAULT_RANGES)
    if path is not None:
        path = Path(path)
        try:
            loaded = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise HyperparamError(f"cannot read {path}: {exc}") from exc
        unknown = set(loaded) - set(HYPERPARAM_KEYS)
        if unknown:
            raise HyperparamError(f"unknown hyperparameter keys: {sorted(unknown)}")
        for key, values in loaded.items():
            if not isinstance(values, list) or not values:
                raise HyperparamError(f"{key} must be a non-empty list")
            if any((not isinstance(v, (int, float))) or v <= 0 for v in values):
                raise HyperparamError(f"{key} must hold positive numbers")
            ranges[key] = values
    return HyperparamRanges(ranges=ranges)
