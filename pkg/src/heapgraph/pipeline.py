"""Corpus-scale graph generation: RAW+JSON pairs in, DOT files out.

Two pipelines exist.  "graph" exports the structure alone;
"graph-with-embedding-comments" additionally computes one feature vector
per chunk node and stores it in the node's comment attribute, making each
output file self-contained for downstream learning.  Output directories
encode the configuration in their name so that a tree of generated
datasets documents itself.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .chunks import AnnotationIntegrity, BrokenChaining, parse_chunks, apply_annotation
from .dotio import export_dot
from .embeddings import (
    DEFAULT_DEPTH,
    SEMANTIC,
    START_BYTES,
    STATISTIC,
    attach_filter_features,
    embed_chunk,
)
from .entropy import FilterPolicy, chunk_start_entropy, filter_chunks
from .graph import BuildOptions, build_memgraph, prune_to_chunks, reduce_to_chunk_graph
from .heap_io import BrokenAnnotation, HeapError, file_id_from_path, load_heap_pair
from .validation import FileCategory, validate_annotation

log = logging.getLogger(__name__)

PIPELINE_GRAPH = "graph"
PIPELINE_GRAPH_COMMENTED = "graph-with-embedding-comments"
PIPELINES = (PIPELINE_GRAPH, PIPELINE_GRAPH_COMMENTED)

EMBEDDINGS = (SEMANTIC, STATISTIC, START_BYTES)

ANNOTATION_TARGET = "chunk-header-node"

WORKERS_ENV = "HEAPGRAPH_WORKERS"


class PipelineUsageError(ValueError):
    """A flag combination that cannot run."""


@dataclass(frozen=True)
class PipelineConfig:
    pipeline: str
    input_dir: Path
    output_root: Path
    index: int = 0
    validate: bool = False
    annotate: bool = False
    embedding: str | None = None
    entropy_mode: str = "none"
    size_mode: str = "none"
    no_value_node: bool = False
    entropy_threshold: float | None = None
    depth: int = DEFAULT_DEPTH

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise PipelineUsageError(f"unknown pipeline {self.pipeline!r}")
        if self.pipeline == PIPELINE_GRAPH_COMMENTED:
            if self.embedding not in EMBEDDINGS:
                raise PipelineUsageError(
                    f"{self.pipeline} needs an embedding out of {', '.join(EMBEDDINGS)}"
                )
        elif self.embedding is not None:
            raise PipelineUsageError(f"{self.pipeline} does not take an embedding")

    def output_dir_name(self) -> str:
        """Directory name as a pure function of the flags, fixed order."""
        parts = [f"{self.index}_{self.pipeline.replace('-', '_')}"]
        if self.validate:
            parts.append("-v")
        if self.annotate:
            parts.extend(["-a", ANNOTATION_TARGET])
        if self.embedding is not None:
            parts.extend(["-c", self.embedding])
        parts.extend(["-e", self.entropy_mode])
        parts.extend(["-s", self.size_mode])
        return "_".join(parts)

    @property
    def output_dir(self) -> Path:
        return Path(self.output_root) / self.output_dir_name()


@dataclass
class FileResult:
    file_id: str
    status: str  # "ok" | "skipped"
    reason: str = ""
    node_count: int = 0
    edge_count: int = 0
    output_path: Path | None = None


@dataclass
class PipelineSummary:
    config: PipelineConfig
    results: list[FileResult] = field(default_factory=list)
    entropy_threshold: float | None = None
    seconds: float = 0.0

    @property
    def processed(self) -> int:
        return sum(1 for r in self.results if r.status == "ok")

    @property
    def skipped(self) -> int:
        return sum(1 for r in self.results if r.status == "skipped")

    def skip_reasons(self) -> dict[str, int]:
        reasons: dict[str, int] = {}
        for result in self.results:
            if result.status == "skipped":
                reasons[result.reason] = reasons.get(result.reason, 0) + 1
        return reasons

    def format_summary(self) -> str:
        lines = [
            f"pipeline {self.config.output_dir_name()}",
            f"  processed {self.processed} file(s), skipped {self.skipped},"
            f" in {self.seconds:.2f}s",
        ]
        if self.entropy_threshold is not None:
            lines.append(f"  entropy threshold {self.entropy_threshold:.6f}")
        for reason, count in sorted(self.skip_reasons().items()):
            lines.append(f"  skipped[{reason}]: {count}")
        return "\n".join(lines)


def scan_input_pairs(input_dir: Path) -> list[tuple[Path, Path]]:
    """All RAW files under the input tree with their JSON siblings."""
    pairs = []
    for raw_path in sorted(Path(input_dir).rglob("*-heap.raw")):
        json_path = raw_path.with_name(file_id_from_path(raw_path) + ".json")
        pairs.append((raw_path, json_path))
    return pairs


def derive_entropy_threshold(pairs: list[tuple[Path, Path]]) -> float:
    """Minimum start-byte entropy over every key chunk in the input set."""
    best: float | None = None
    for raw_path, json_path in pairs:
        if not json_path.exists():
            continue
        try:
            heap, annotation = load_heap_pair(raw_path, json_path)
            chunks = parse_chunks(heap)
            apply_annotation(chunks, annotation)
        except (HeapError, BrokenChaining, OSError, ValueError):
            continue
        for chunk in chunks:
            if chunk.key_letter is None:
                continue
            value = chunk_start_entropy(chunk, heap)
            best = value if best is None else min(best, value)
    if best is None:
        raise PipelineUsageError(
            "entropy filter requested but no key chunk provides a threshold"
        )
    return best


def process_file(
    config: PipelineConfig, raw_path: Path, json_path: Path
) -> tuple[FileResult, str | None]:
    """One input pair to one DOT text; returns (result, dot_text or None)."""
    file_id = file_id_from_path(raw_path)
    result = FileResult(file_id=file_id, status="skipped")

    def skip(reason: str) -> tuple[FileResult, None]:
        result.reason = reason
        return result, None

    needs_json = config.validate or config.annotate
    if needs_json and not json_path.exists():
        return skip("missing-annotation")

    if config.validate:
        try:
            obj = json.loads(json_path.read_text())
        except (OSError, ValueError):
            return skip("validation:broken")
        if not isinstance(obj, dict) or not obj:
            return skip("validation:broken")
        heap_size = (raw_path.stat().st_size + 7) // 8 * 8
        report = validate_annotation(obj, heap_size)
        if report.category is not FileCategory.CORRECT_COMPLETE:
            return skip(f"validation:{report.category.name.lower()}")

    try:
        heap, annotation = load_heap_pair(
            raw_path, json_path if json_path.exists() else None
        )
    except (BrokenAnnotation, HeapError, OSError, ValueError) as error:
        return skip(f"load-error:{error}")

    try:
        graph, warnings = build_memgraph(
            heap,
            annotation if config.annotate else None,
            BuildOptions(annotate=config.annotate, strict=config.validate),
        )
    except BrokenChaining:
        return skip("broken-chaining")
    except AnnotationIntegrity as error:
        return skip(f"annotation-integrity:{error}")
    for message in warnings:
        log.warning("%s: %s", file_id, message)

    if config.no_value_node:
        graph = reduce_to_chunk_graph(graph)

    policy = FilterPolicy(
        entropy_mode=config.entropy_mode,
        size_mode=config.size_mode,
        entropy_threshold=config.entropy_threshold,
    )
    kept, features = filter_chunks(graph.chunks, heap, policy)
    if policy.any_active:
        graph = prune_to_chunks(graph, kept)
    if not kept:
        return skip("no-chunk-left")

    if config.pipeline == PIPELINE_GRAPH_COMMENTED:
        graph.embedding_type = config.embedding
        for chunk in kept:
            vector = embed_chunk(
                graph,
                chunk.header_address,
                config.embedding,
                user_data=chunk.user_data(heap),
                depth=config.depth,
            )
            extras = features.get(chunk.address)
            if extras:
                vector = attach_filter_features(vector, extras)
            graph.embeddings[chunk.header_address] = vector

    text = export_dot(graph)
    result.status = "ok"
    result.node_count = len(graph.nodes)
    result.edge_count = len(graph.edges)
    return result, text


def _process_one(args: tuple[PipelineConfig, Path, Path]) -> FileResult:
    config, raw_path, json_path = args
    result, text = process_file(config, raw_path, json_path)
    out_dir = config.output_dir
    if text is not None:
        out_path = out_dir / f"{result.file_id}.gv"
        out_path.write_text(text)
        result.output_path = out_path
    else:
        marker = out_dir / f"{result.file_id}.skipped"
        marker.write_text(result.reason + "\n")
        result.output_path = marker
    return result


def worker_count() -> int:
    value = os.environ.get(WORKERS_ENV, "")
    if value.isdigit() and int(value) > 0:
        return int(value)
    return 1


def run_pipeline(config: PipelineConfig) -> PipelineSummary:
    started = time.monotonic()
    pairs = scan_input_pairs(config.input_dir)
    if not pairs:
        raise PipelineUsageError(f"no heap dumps under {config.input_dir}")

    if config.entropy_mode == "only-max-entropy" and config.entropy_threshold is None:
        config = replace(config, entropy_threshold=derive_entropy_threshold(pairs))
        log.info("derived entropy threshold %.6f", config.entropy_threshold)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    summary = PipelineSummary(config=config, entropy_threshold=config.entropy_threshold)

    jobs = [(config, raw_path, json_path) for raw_path, json_path in pairs]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summary.results = list(pool.map(_process_one, jobs, chunksize=8))
    else:
        summary.results = [_process_one(job) for job in jobs]

    summary.seconds = time.monotonic() - started
    for result in summary.results:
        if result.status == "ok":
            log.info(
                "%s: %d nodes, %d edges", result.file_id, result.node_count, result.edge_count
            )
        else:
            log.info("%s: skipped (%s)", result.file_id, result.reason)
    return summary
