"""Heap dump analysis: chunk parsing, pointer scanning, memory graphs.

Turns raw GLIBC heap dumps (with optional JSON key annotations) into typed
directed graphs, per-chunk feature vectors, and DOT files that downstream
learning pipelines can consume without touching the binary data again.
"""

from .chunks import (
    AnnotationIntegrity,
    BrokenChaining,
    Chunk,
    MallocHeader,
    ParseStats,
    apply_annotation,
    chunk_statistics,
    parse_chunks,
    parse_malloc_header,
)
from .dotio import DotDocument, DotParseError, export_dot, graphs_equivalent, parse_dot
from .embeddings import (
    FeatureVector,
    SEMANTIC,
    START_BYTES,
    STATISTIC,
    embed_chunk,
    semantic_embedding,
    start_bytes_embedding,
    statistic_embedding,
)
from .entropy import (
    FilterPolicy,
    block_entropies,
    chunk_start_entropy,
    entropy_pairs,
    filter_chunks,
    max_entropy_pairs,
    shannon_entropy,
    smartkex_preprocess,
)
from .graph import (
    BuildOptions,
    MemEdge,
    MemGraph,
    MemNode,
    NodeType,
    build_memgraph,
    label_key_chunks,
    prune_to_chunks,
    reduce_to_chunk_graph,
)
from .heap_io import (
    Annotation,
    AddressOutOfRange,
    BrokenAnnotation,
    HeapDump,
    HeapError,
    KeyRecord,
    annotation_from_json,
    hex_str_to_int,
    load_heap_pair,
    pointer_str_to_int,
)
from .pipeline import PipelineConfig, PipelineUsageError, run_pipeline
from .pointers import PointerHit, detect_pointers
from .synth import (
    ChunkSpec,
    KeyPlant,
    PointerPlant,
    SynthConstructionError,
    SynthGroundTruth,
    SynthHeapSpec,
    WordPlant,
    random_synth_spec,
    synth_heap,
    write_synth_pair,
)
from .validation import (
    FileCategory,
    KeyVerdict,
    ValidationReport,
    classify_corpus,
    validate_annotation,
    validate_key_entry,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationIntegrity",
    "AddressOutOfRange",
    "BrokenAnnotation",
    "BrokenChaining",
    "BuildOptions",
    "Chunk",
    "ChunkSpec",
    "DotDocument",
    "DotParseError",
    "FeatureVector",
    "FileCategory",
    "FilterPolicy",
    "HeapDump",
    "HeapError",
    "KeyPlant",
    "KeyRecord",
    "KeyVerdict",
    "MallocHeader",
    "MemEdge",
    "MemGraph",
    "MemNode",
    "NodeType",
    "ParseStats",
    "PipelineConfig",
    "PipelineUsageError",
    "PointerHit",
    "PointerPlant",
    "SEMANTIC",
    "START_BYTES",
    "STATISTIC",
    "SynthConstructionError",
    "SynthGroundTruth",
    "SynthHeapSpec",
    "ValidationReport",
    "WordPlant",
    "annotation_from_json",
    "apply_annotation",
    "block_entropies",
    "build_memgraph",
    "chunk_start_entropy",
    "chunk_statistics",
    "classify_corpus",
    "detect_pointers",
    "embed_chunk",
    "entropy_pairs",
    "export_dot",
    "filter_chunks",
    "graphs_equivalent",
    "hex_str_to_int",
    "label_key_chunks",
    "load_heap_pair",
    "max_entropy_pairs",
    "parse_chunks",
    "parse_dot",
    "parse_malloc_header",
    "pointer_str_to_int",
    "prune_to_chunks",
    "random_synth_spec",
    "reduce_to_chunk_graph",
    "run_pipeline",
    "semantic_embedding",
    "shannon_entropy",
    "smartkex_preprocess",
    "start_bytes_embedding",
    "statistic_embedding",
    "synth_heap",
    "validate_annotation",
    "validate_key_entry",
    "write_synth_pair",
]
