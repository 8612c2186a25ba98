"""Entropy measures and chunk candidate filters.

Key material is (pseudo)random, so 8-byte blocks holding keys show near
maximal byte entropy while most heap content does not.  Two filters build on
that: a block-pair ranking (keys are at least 16 bytes, hence cover two
adjacent blocks) and per-chunk start-byte entropy thresholds.  A row-flag
preprocessing over the Nx8 byte matrix is kept as the prior-work baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chunks import Chunk
from .heap_io import BLOCK_SIZE, HeapDump

KEY_CHUNK_SIZES = frozenset({32, 48, 64})
# Candidate key start bytes: at most this many user-data bytes per chunk.
START_BYTES_LIMIT = 64


def shannon_entropy(data: bytes | bytearray | np.ndarray) -> float:
    """Byte-frequency Shannon entropy in bits; empty input gives 0.0."""
    arr = np.frombuffer(bytes(data), dtype=np.uint8) if not isinstance(data, np.ndarray) else data
    if arr.size == 0:
        return 0.0
    _, counts = np.unique(arr, return_counts=True)
    probs = counts / arr.size
    return float(-(probs * np.log2(probs)).sum())


def block_entropies(heap: HeapDump) -> np.ndarray:
    """Per-block entropy for the whole dump, vectorized.

    Sorting each 8-byte row groups equal bytes into runs; run lengths are
    the byte frequencies, which is all the entropy needs.
    """
    n = heap.block_count
    if n == 0:
        return np.zeros(0)
    matrix = np.frombuffer(heap.data, dtype=np.uint8).reshape(n, BLOCK_SIZE)
    ordered = np.sort(matrix, axis=1)
    starts = np.ones((n, BLOCK_SIZE), dtype=bool)
    starts[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    flat_starts = np.flatnonzero(starts.ravel())
    run_lengths = np.diff(np.append(flat_starts, n * BLOCK_SIZE))
    probs = run_lengths / BLOCK_SIZE
    contributions = -(probs * np.log2(probs))
    entropies = np.zeros(n)
    np.add.at(entropies, flat_starts // BLOCK_SIZE, contributions)
    return entropies


@dataclass(frozen=True)
class EntropyPair:
    """Adjacent block pair (block_index, block_index + 1) and its score."""

    block_index: int
    entropy_sum: float
    rank: int


def entropy_pairs(heap: HeapDump) -> list[EntropyPair]:
    """All adjacent block pairs sorted by summed entropy, descending.

    Ties keep ascending block order, so the result is deterministic.  A
    dump with N blocks yields N - 1 pairs.
    """
    entropies = block_entropies(heap)
    if entropies.size < 2:
        return []
    sums = entropies[:-1] + entropies[1:]
    order = np.argsort(-sums, kind="stable")
    return [
        EntropyPair(block_index=int(i), entropy_sum=float(sums[i]), rank=rank)
        for rank, i in enumerate(order)
    ]


def max_entropy_pairs(pairs: list[EntropyPair]) -> list[EntropyPair]:
    """The pairs sharing the maximal entropy sum."""
    if not pairs:
        return []
    best = pairs[0].entropy_sum
    return [p for p in pairs if p.entropy_sum == best]


def smartkex_preprocess(heap: HeapDump) -> tuple[np.ndarray, list[tuple[int, bytes]]]:
    """Prior-work row-flagging baseline over the Nx8 byte matrix.

    A byte counts as "different" when it differs from both its right and
    lower neighbour (bitwise AND of the absolute differences); rows with at
    least half such bytes are flagged, and a row survives only if the next
    row is flagged too, which drops isolated rows.  Edge rows and the last
    column use whatever neighbours exist.  Returns the surviving row mask
    and the deduplicated 128-byte aligned slices covering surviving rows.
    """
    n = heap.block_count
    if n == 0:
        return np.zeros(0, dtype=bool), []
    matrix = np.frombuffer(heap.data, dtype=np.uint8).reshape(n, BLOCK_SIZE).astype(np.int16)

    right = np.abs(matrix[:, 1:] - matrix[:, :-1])  # (n, 7)
    down = np.abs(matrix[1:, :] - matrix[:-1, :])  # (n-1, 8)

    diff = np.zeros((n, BLOCK_SIZE), dtype=np.int16)
    diff[:-1, :-1] = right[:-1, :] & down[:, :-1]
    # Truncated neighbourhoods: last column only has a lower neighbour,
    # last row only a right one, the corner has neither.
    diff[:-1, -1] = down[:, -1]
    diff[-1, :-1] = right[-1, :]

    row_flags = (diff != 0).sum(axis=1) >= BLOCK_SIZE // 2
    surviving = row_flags.copy()
    surviving[:-1] &= row_flags[1:]

    slices: list[tuple[int, bytes]] = []
    for window in sorted({int(i) // 16 for i in np.flatnonzero(surviving)}):
        offset = window * 128
        slices.append((offset, heap.data[offset : offset + 128]))
    return surviving, slices


def chunk_start_bytes(chunk: Chunk, heap: HeapDump, limit: int = START_BYTES_LIMIT) -> bytes:
    """First min(limit, user_data_length) user-data bytes of a chunk."""
    return chunk.user_data(heap)[:limit]


def chunk_start_entropy(chunk: Chunk, heap: HeapDump, limit: int = START_BYTES_LIMIT) -> float:
    return shannon_entropy(chunk_start_bytes(chunk, heap, limit))


@dataclass(frozen=True)
class FilterPolicy:
    """Which candidate filters run, and with what threshold.

    Mode "none" turns a filter into a feature provider: instead of dropping
    chunks, its value (start-byte entropy / size-allowed flag) is attached
    to the feature vectors downstream.  entropy_threshold must come from
    the data (minimum start-byte entropy over known key chunks of the
    corpus at hand); there is deliberately no hardcoded default.
    """

    entropy_mode: str = "none"  # "none" | "only-max-entropy"
    size_mode: str = "none"  # "none" | "activate"
    entropy_threshold: float | None = None
    allowed_sizes: frozenset[int] = KEY_CHUNK_SIZES

    def __post_init__(self) -> None:
        if self.entropy_mode not in ("none", "only-max-entropy"):
            raise ValueError(f"unknown entropy filter mode {self.entropy_mode!r}")
        if self.size_mode not in ("none", "activate"):
            raise ValueError(f"unknown size filter mode {self.size_mode!r}")
        if self.entropy_mode == "only-max-entropy" and self.entropy_threshold is None:
            raise ValueError("entropy filter needs a data-derived threshold")

    @property
    def any_active(self) -> bool:
        return self.entropy_mode != "none" or self.size_mode != "none"


def min_key_chunk_entropy(
    annotated_chunks: list[tuple[Chunk, HeapDump]], limit: int = START_BYTES_LIMIT
) -> float:
    """Corpus-derived entropy threshold: minimum over known key chunks."""
    values = [
        chunk_start_entropy(chunk, heap, limit)
        for chunk, heap in annotated_chunks
        if chunk.key_letter is not None
    ]
    if not values:
        raise ValueError("no key-annotated chunks to derive a threshold from")
    return min(values)


def filter_chunks(
    chunks: list[Chunk], heap: HeapDump, policy: FilterPolicy
) -> tuple[list[Chunk], dict[int, dict[str, float]]]:
    """Apply the active filters; compute feature values for inactive ones.

    Returns the kept chunks plus a per-chunk feature map (keyed by chunk
    address) holding "entropy" and/or "size_in_key_sizes" for the filters
    running in feature mode.
    """
    kept: list[Chunk] = []
    features: dict[int, dict[str, float]] = {}
    for chunk in chunks:
        entropy = chunk_start_entropy(chunk, heap)
        size_ok = chunk.byte_size in policy.allowed_sizes
        if policy.size_mode == "activate" and not size_ok:
            continue
        if policy.entropy_mode == "only-max-entropy" and entropy < policy.entropy_threshold:
            continue
        chunk_features: dict[str, float] = {}
        if policy.entropy_mode == "none":
            chunk_features["entropy"] = entropy
        if policy.size_mode == "none":
            chunk_features["size_in_key_sizes"] = float(size_ok)
        kept.append(chunk)
        features[chunk.address] = chunk_features
    return kept, features
