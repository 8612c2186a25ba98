"""Per-node feature matrices for the classifiers.

Three families of node features exist, named after the `node_embedding`
column of the results CSV:

  chunk-header-node   the vectors the generator stored in node comments
  node2vec            structural embedding trained here on the graph
  node2vec-<type>     the two concatenated, Node2Vec part first

Only chunk header nodes carry comment vectors and a key/non-key ground
truth, so classifier rows cover exactly those.  The graph convolution
models instead consume the whole graph: every node gets a feature row
(zeros where no vector exists) and a mask marks the chunk rows that
contribute to loss and evaluation.

The comment vectors carry one identifier column (chn_addr) and end with
filter feature columns (entropy, size_in_key_sizes); the learners only
ever see the columns between those.
"""

from __future__ import annotations

import numpy as np

from .dotgraph import FILTER_FIELDS, IDENTIFIER_FIELD, MemoryGraph


class FeatureConfigError(ValueError):
    pass


def learning_field_indices(fields: tuple[str, ...]) -> list[int]:
    skip = {IDENTIFIER_FIELD}
    for name in reversed(fields):
        if name in FILTER_FIELDS:
            skip.add(name)
        else:
            break
    return [i for i, name in enumerate(fields) if name not in skip]


def evaluation_field_names(fields: tuple[str, ...]) -> list[str]:
    """Learning fields plus the filter features; only the id column drops."""
    return [name for name in fields if name != IDENTIFIER_FIELD]


def _vector_rows(record: MemoryGraph, indices: list[int]) -> np.ndarray:
    rows = []
    for address in record.chn_addresses:
        vector = record.graph.nodes[address]["vector"]
        if vector is None:
            raise FeatureConfigError(f"{record.name}: node 0x{address:x} has no vector")
        rows.append([vector[i] for i in indices])
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(indices))


def comment_features(record: MemoryGraph) -> np.ndarray:
    """(n_chunk_nodes, n_learning_fields) matrix in ascending address order."""
    if record.embedding_fields is None:
        raise FeatureConfigError(f"{record.name} carries no embedded feature vectors")
    return _vector_rows(record, learning_field_indices(record.embedding_fields))


def evaluation_features(record: MemoryGraph) -> tuple[np.ndarray, list[str]]:
    """All stored fields except the identifier, filter features included."""
    fields = record.embedding_fields
    if fields is None:
        raise FeatureConfigError(f"{record.name} carries no embedded feature vectors")
    keep = [i for i, name in enumerate(fields) if name != IDENTIFIER_FIELD]
    return _vector_rows(record, keep), evaluation_field_names(fields)


def labels(record: MemoryGraph) -> np.ndarray:
    return np.asarray(record.labels, dtype=np.int64)


def chn_mask(record: MemoryGraph) -> np.ndarray:
    """Boolean mask over all nodes (ascending address) selecting chunk rows."""
    chunk = set(record.chn_addresses)
    return np.asarray([a in chunk for a in record.node_addresses], dtype=bool)


def assemble_features(
    record: MemoryGraph,
    node_embedding: str,
    node2vec_vectors: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Per-chunk-node feature matrix under the named embedding.

    Combined embeddings concatenate the Node2Vec part first, then the
    comment features, so nb_node_features is stable for a given config.
    """
    def node2vec_part() -> np.ndarray:
        if node2vec_vectors is None:
            raise FeatureConfigError(f"{node_embedding} requested without trained vectors")
        return np.stack(
            [node2vec_vectors[a] for a in record.chn_addresses]
        ).astype(np.float64)

    if node_embedding == "node2vec":
        return node2vec_part()
    if node_embedding == "chunk-header-node":
        return comment_features(record)
    if node_embedding.startswith("node2vec-"):
        wanted = node_embedding[len("node2vec-") :]
        if wanted != record.embedding_type:
            raise FeatureConfigError(
                f"{node_embedding} does not match dataset embedding {record.embedding_type}"
            )
        return np.concatenate([node2vec_part(), comment_features(record)], axis=1)
    raise FeatureConfigError(f"unknown node embedding {node_embedding!r}")


def full_graph_features(
    record: MemoryGraph,
    node_embedding: str,
    node2vec_vectors: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Feature rows for every node of the graph, for convolution models.

    Comment-vector columns are zero on nodes that have no vector; the
    Node2Vec part always covers the full graph.
    """
    addresses = record.node_addresses

    def node2vec_part() -> np.ndarray:
        if node2vec_vectors is None:
            raise FeatureConfigError(f"{node_embedding} requested without trained vectors")
        return np.stack([node2vec_vectors[a] for a in addresses]).astype(np.float64)

    def comment_part() -> np.ndarray:
        fields = record.embedding_fields
        if fields is None:
            raise FeatureConfigError(f"{record.name} carries no embedded feature vectors")
        indices = learning_field_indices(fields)
        matrix = np.zeros((len(addresses), len(indices)), dtype=np.float64)
        for row, address in enumerate(addresses):
            vector = record.graph.nodes[address]["vector"]
            if vector is not None:
                matrix[row] = [vector[i] for i in indices]
        return matrix

    if node_embedding == "node2vec":
        return node2vec_part()
    if node_embedding == "chunk-header-node":
        return comment_part()
    if node_embedding.startswith("node2vec-"):
        wanted = node_embedding[len("node2vec-") :]
        if wanted != record.embedding_type:
            raise FeatureConfigError(
                f"{node_embedding} does not match dataset embedding {record.embedding_type}"
            )
        return np.concatenate([node2vec_part(), comment_part()], axis=1)
    raise FeatureConfigError(f"unknown node embedding {node_embedding!r}")


def check_feature_width(matrices: list[np.ndarray]) -> int:
    widths = {m.shape[1] for m in matrices}
    if len(widths) != 1:
        raise FeatureConfigError(f"feature width differs across graphs: {sorted(widths)}")
    return widths.pop()
