"""Per-chunk feature vectors attached to CHN nodes.

Three kinds:
  chunk-semantic-embedding     basic chunk attributes + layered counts of
                               CHN/PN nodes met while walking out (children)
                               and against (ancestors) the edge direction
  chunk-statistic-embedding    basic attributes + bit n-gram frequencies
                               (n = 1..8, stride 1) + byte moments + entropy
  chunk-start-bytes-embedding  basic attributes + the first user-data bytes

chn_addr is carried in every vector as an identifier column, not a learning
feature.  Filter values (start-byte entropy, size flag) can be appended as
documented extras when the corresponding filter runs in feature mode.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .entropy import shannon_entropy
from .graph import MemGraph, NodeType

SEMANTIC = "chunk-semantic-embedding"
STATISTIC = "chunk-statistic-embedding"
START_BYTES = "chunk-start-bytes-embedding"
EMBEDDING_KINDS = (SEMANTIC, STATISTIC, START_BYTES)

DEFAULT_DEPTH = 8
DEFAULT_START_BYTES = 64
NGRAM_MAX = 8

IDENTIFIER_FIELD = "chn_addr"
BASIC_FIELDS = (
    "block_position_in_chunk",
    IDENTIFIER_FIELD,
    "chunk_byte_size",
    "chunk_number_in_heap",
    "chunk_ptrs",
    "chunk_vns",
)
# Filter features appended in this order when present.
FILTER_FIELDS = ("entropy", "size_in_key_sizes")


@dataclass(frozen=True)
class FeatureVector:
    """A named, ordered feature vector for one chunk."""

    embedding_type: str
    field_names: tuple[str, ...]
    values: tuple[float, ...]
    extra_fields: tuple[str, ...] = ()
    degenerate: bool = False

    def __post_init__(self) -> None:
        if len(self.field_names) != len(self.values):
            raise ValueError("field/value length mismatch")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.field_names, self.values))

    def value_of(self, name: str) -> float:
        return self.values[self.field_names.index(name)]

    @property
    def learning_fields(self) -> tuple[str, ...]:
        """Everything except the identifier column and appended extras."""
        skip = {IDENTIFIER_FIELD, *self.extra_fields}
        return tuple(name for name in self.field_names if name not in skip)

    @property
    def learning_feature_count(self) -> int:
        return len(self.learning_fields)


def semantic_field_names(depth: int = DEFAULT_DEPTH) -> tuple[str, ...]:
    """Field order is fixed (and matches the wire format goldens)."""
    return (
        "block_position_in_chunk",
        IDENTIFIER_FIELD,
        *(f"chns_ancestor_{i}" for i in range(1, depth + 1)),
        *(f"chns_children_{i}" for i in range(1, depth + 1)),
        "chunk_byte_size",
        "chunk_number_in_heap",
        "chunk_ptrs",
        "chunk_vns",
        *(f"ptrs_ancestor_{i}" for i in range(1, depth + 1)),
        *(f"ptrs_children_{i}" for i in range(1, depth + 1)),
    )


def layered_type_counts(
    graph: MemGraph, seeds: list[int], depth: int, direction: str
) -> list[tuple[int, int]]:
    """Per-layer (CHN count, PN count) of a breadth walk from the seed set.

    Layer 1 counts the seeds themselves; each following layer is the set of
    neighbors (out- or in-, by direction) of the previous one.  Sets, not
    paths: a node reached twice in one layer counts once.
    """
    if direction not in ("out", "in"):
        raise ValueError(f"direction must be 'out' or 'in', not {direction!r}")
    step = graph.out_neighbors if direction == "out" else graph.in_neighbors
    counts: list[tuple[int, int]] = []
    current: set[int] = set(seeds)
    for _ in range(depth):
        chn = 0
        ptr = 0
        following: set[int] = set()
        for address in current:
            node_type = graph.nodes[address].node_type
            if node_type is NodeType.CHN:
                chn += 1
            elif node_type is NodeType.PN:
                ptr += 1
            following.update(step(address))
        counts.append((chn, ptr))
        current = following
    return counts


def chunk_basic_attributes(graph: MemGraph, chn_addr: int) -> dict[str, float]:
    node = graph.nodes[chn_addr]
    if node.node_type is not NodeType.CHN:
        raise ValueError(f"node at 0x{chn_addr:x} is {node.node_type.value}, not CHN")
    chunk = graph.chunk_at_header(chn_addr)
    if chunk is None:
        raise ValueError(f"no chunk recorded for CHN at 0x{chn_addr:x}")
    pointers, values = graph.chunk_stats.get(chn_addr, (0, 0))
    return {
        "block_position_in_chunk": 0,
        IDENTIFIER_FIELD: chn_addr,
        "chunk_byte_size": chunk.byte_size,
        "chunk_number_in_heap": node.chunk_index,
        "chunk_ptrs": pointers,
        "chunk_vns": values,
    }


def semantic_embedding(graph: MemGraph, chn_addr: int, depth: int = DEFAULT_DEPTH) -> FeatureVector:
    """Basic attributes + 4*depth layered neighborhood counts.

    The walk is seeded with the CHN's out-neighbors in both directions,
    then explores in-edges for the ancestor features and out-edges for the
    children features.
    """
    basics = chunk_basic_attributes(graph, chn_addr)
    seeds = graph.out_neighbors(chn_addr)
    ancestors = layered_type_counts(graph, seeds, depth, "in")
    children = layered_type_counts(graph, seeds, depth, "out")

    values: dict[str, float] = dict(basics)
    for i, (chn, ptr) in enumerate(ancestors, start=1):
        values[f"chns_ancestor_{i}"] = chn
        values[f"ptrs_ancestor_{i}"] = ptr
    for i, (chn, ptr) in enumerate(children, start=1):
        values[f"chns_children_{i}"] = chn
        values[f"ptrs_children_{i}"] = ptr

    names = semantic_field_names(depth)
    return FeatureVector(
        embedding_type=SEMANTIC,
        field_names=names,
        values=tuple(values[name] for name in names),
    )


def ngram_field_names(max_n: int = NGRAM_MAX) -> tuple[str, ...]:
    return tuple(
        f"bit_ngram_{n}_{pattern:0{n}b}" for n in range(1, max_n + 1) for pattern in range(2**n)
    )


STAT_FIELDS = ("stat_mean", "stat_std", "stat_mad", "stat_skewness", "stat_kurtosis", "stat_entropy")


def bit_ngram_frequencies(data: bytes, max_n: int = NGRAM_MAX) -> np.ndarray:
    """Normalized sliding-window bit n-gram counts, n = 1..max_n.

    Bits are read MSB-first inside each byte; windows slide one bit at a
    time over the whole bit string.  2 + 4 + ... + 2^max_n values.
    """
    chunks: list[np.ndarray] = []
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    for n in range(1, max_n + 1):
        if bits.size < n:
            chunks.append(np.zeros(2**n))
            continue
        windows = np.lib.stride_tricks.sliding_window_view(bits, n)
        weights = 1 << np.arange(n - 1, -1, -1)
        patterns = windows @ weights
        counts = np.bincount(patterns, minlength=2**n).astype(float)
        chunks.append(counts / patterns.size)
    return np.concatenate(chunks)


def byte_moments(data: bytes) -> tuple[float, float, float, float, float, float]:
    """(mean, std, mean abs deviation, skewness, excess kurtosis, entropy).

    Population std (no Bessel correction); skewness and kurtosis are the
    biased moment ratios with kurtosis reported as excess.  Caller must
    handle std == 0 separately.
    """
    x = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
    mean = float(x.mean())
    std = float(x.std())
    mad = float(np.abs(x - mean).mean())
    centered = x - mean
    skewness = float((centered**3).mean() / std**3)
    kurtosis = float((centered**4).mean() / std**4 - 3.0)
    return mean, std, mad, skewness, kurtosis, shannon_entropy(data)


def statistic_embedding(data: bytes, max_n: int = NGRAM_MAX) -> FeatureVector:
    """Bit n-gram frequencies plus byte moments for one chunk's user data.

    Constant data (zero standard deviation) has no meaningful moments; such
    chunks are marked degenerate, their values zeroed here and serialized
    as NaN on the wire.
    """
    names = (*ngram_field_names(max_n), *STAT_FIELDS)
    x = np.frombuffer(data, dtype=np.uint8)
    degenerate = x.size == 0 or float(x.std()) == 0.0
    if degenerate:
        return FeatureVector(
            embedding_type=STATISTIC,
            field_names=names,
            values=tuple(0.0 for _ in names),
            degenerate=True,
        )
    values = (*bit_ngram_frequencies(data, max_n), *byte_moments(data))
    return FeatureVector(
        embedding_type=STATISTIC,
        field_names=names,
        values=tuple(float(v) for v in values),
    )


def start_bytes_field_names(limit: int = DEFAULT_START_BYTES) -> tuple[str, ...]:
    return tuple(f"start_byte_{i}" for i in range(limit))


def start_bytes_embedding(data: bytes, limit: int = DEFAULT_START_BYTES) -> FeatureVector:
    """The first min(limit, len(data)) bytes as features, zero-padded."""
    padded = data[:limit] + b"\x00" * max(0, limit - len(data))
    return FeatureVector(
        embedding_type=START_BYTES,
        field_names=start_bytes_field_names(limit),
        values=tuple(int(b) for b in padded),
    )


def compose_with_basics(graph: MemGraph, chn_addr: int, part: FeatureVector) -> FeatureVector:
    """Prefix a bytes-level vector with the chunk's basic attributes."""
    basics = chunk_basic_attributes(graph, chn_addr)
    return FeatureVector(
        embedding_type=part.embedding_type,
        field_names=(*BASIC_FIELDS, *part.field_names),
        values=(*(basics[name] for name in BASIC_FIELDS), *part.values),
        extra_fields=part.extra_fields,
        degenerate=part.degenerate,
    )


def embed_chunk(
    graph: MemGraph,
    chn_addr: int,
    kind: str,
    user_data: bytes | None = None,
    depth: int = DEFAULT_DEPTH,
    start_bytes_limit: int = DEFAULT_START_BYTES,
) -> FeatureVector:
    """Full vector (basics + kind-specific features) for one CHN."""
    if kind == SEMANTIC:
        return semantic_embedding(graph, chn_addr, depth)
    if user_data is None:
        raise ValueError(f"{kind} needs the chunk's user data bytes")
    if kind == STATISTIC:
        return compose_with_basics(graph, chn_addr, statistic_embedding(user_data))
    if kind == START_BYTES:
        return compose_with_basics(graph, chn_addr, start_bytes_embedding(user_data, start_bytes_limit))
    raise ValueError(f"unknown embedding kind {kind!r}")


def attach_filter_features(vector: FeatureVector, features: dict[str, float]) -> FeatureVector:
    """Append filter-computed values (entropy, size flag) as extras.

    The values come straight from the filter pass, so feature mode and
    filter mode can never disagree about a chunk.
    """
    names = tuple(name for name in FILTER_FIELDS if name in features)
    if not names:
        return vector
    overlap = set(names) & set(vector.field_names)
    if overlap:
        raise ValueError(f"filter features already present: {sorted(overlap)}")
    return replace(
        vector,
        field_names=(*vector.field_names, *names),
        values=(*vector.values, *(float(features[name]) for name in names)),
        extra_fields=(*vector.extra_fields, *names),
    )
