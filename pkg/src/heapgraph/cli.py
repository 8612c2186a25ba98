"""Command line front end.

Subcommands mirror the workflow: check-annotations to triage a corpus,
parse-chunks and scan-pointers to inspect single dumps, pipeline to
generate graph datasets.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .chunks import (
    BrokenChaining,
    ParseStats,
    apply_annotation,
    chunk_statistics,
    format_chunk,
    parse_chunks,
)
from .embeddings import SEMANTIC, START_BYTES, STATISTIC
from .heap_io import BrokenAnnotation, HeapError, load_heap_pair
from .pipeline import (
    PIPELINES,
    PipelineConfig,
    PipelineUsageError,
    run_pipeline,
    scan_input_pairs,
)
from .pointers import detect_pointers
from .validation import classify_corpus, drop_broken_chaining

log = logging.getLogger(__name__)


def _cmd_check_annotations(args: argparse.Namespace) -> int:
    report = classify_corpus(args.directory, clean_dir=args.clean_dir)
    print(report.format_summary())
    if args.drop_broken_chaining:
        if args.clean_dir is None:
            print("--drop-broken-chaining needs --clean-dir", file=sys.stderr)
            return 2
        removed = drop_broken_chaining(args.clean_dir)
        print(f"Dropped {len(removed)} file(s) with broken chunk chaining:")
        for file_id in removed:
            print(f"  {file_id}")
    return 0


def _parse_one(raw_path: Path, debug: bool) -> ParseStats:
    json_path = raw_path.with_name(raw_path.name.replace("-heap.raw", ".json"))
    heap, annotation = load_heap_pair(
        raw_path, json_path if json_path.exists() else None
    )
    chunks = parse_chunks(heap)
    if annotation is not None:
        apply_annotation(chunks, annotation)
    if debug:
        for ordinal, chunk in enumerate(chunks, start=1):
            print(format_chunk(chunk, ordinal))
    return chunk_statistics(heap, chunks, annotation)


def _cmd_parse_chunks(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if path.is_dir():
        pairs = scan_input_pairs(path)
        print(f"Input is directory: {path}")
        print(f"Found {len(pairs)} files in {path}.")
        total = ParseStats()
        skipped = 0
        for raw_path, _ in pairs:
            try:
                total = total + _parse_one(raw_path, debug=False)
            except (BrokenChaining, HeapError, BrokenAnnotation, OSError) as error:
                skipped += 1
                log.warning("%s: %s", raw_path.name, error)
        total.skipped_files = skipped
        print(total.format_corpus_summary())
        return 0
    try:
        stats = _parse_one(path, debug=args.debug)
    except (BrokenChaining, HeapError, BrokenAnnotation, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    print(stats.format_file_summary())
    return 0


def _cmd_scan_pointers(args: argparse.Namespace) -> int:
    try:
        heap, _ = load_heap_pair(Path(args.raw))
    except (HeapError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    hits = detect_pointers(heap)
    for hit in hits:
        print(f"{hit.block_index} 0x{hit.value:x}")
    print(f"{len(hits)} potential pointer(s) in {heap.block_count} blocks")
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    try:
        config = PipelineConfig(
            pipeline=args.pipeline,
            input_dir=Path(args.input),
            output_root=Path(args.output),
            index=args.index,
            validate=args.validate,
            annotate=args.annotate is not None,
            embedding=args.comment_embedding,
            entropy_mode=args.entropy_filter,
            size_mode=args.size_filter,
            no_value_node=args.no_value_node,
            entropy_threshold=args.entropy_threshold,
            depth=args.depth,
        )
        summary = run_pipeline(config)
    except PipelineUsageError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    print(summary.format_summary())
    return 0 if summary.processed or not summary.results else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heapgraph",
        description="Heap dump chunk parsing, pointer scanning, and graph generation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser(
        "check-annotations", help="classify annotation files and optionally copy the keepers"
    )
    check.add_argument("directory", type=Path)
    check.add_argument("--clean-dir", type=Path, default=None)
    check.add_argument(
        "--drop-broken-chaining",
        action="store_true",
        help="after copying, delete cleaned pairs whose chunk chain does not parse",
    )
    check.set_defaults(func=_cmd_check_annotations)

    chunks = sub.add_parser("parse-chunks", help="walk the malloc chunk chain of a dump")
    chunks.add_argument("path", type=Path, help="a *-heap.raw file or a directory of pairs")
    chunks.add_argument("--debug", action="store_true", help="print one line per chunk")
    chunks.set_defaults(func=_cmd_parse_chunks)

    scan = sub.add_parser("scan-pointers", help="list blocks holding in-range aligned addresses")
    scan.add_argument("raw", type=Path)
    scan.set_defaults(func=_cmd_scan_pointers)

    pipe = sub.add_parser("pipeline", help="generate DOT graph datasets from dump pairs")
    pipe.add_argument("pipeline", choices=PIPELINES)
    pipe.add_argument("-i", "--input", required=True, help="directory of RAW+JSON pairs")
    pipe.add_argument("-o", "--output", required=True, help="root for the output directory")
    pipe.add_argument(
        "-v",
        "--validate",
        action="store_true",
        help="skip files whose annotations do not validate as correct and complete",
    )
    pipe.add_argument(
        "-a",
        "--annotate",
        choices=["chunk-header-node"],
        default=None,
        help="attach key annotations to chunk header nodes",
    )
    pipe.add_argument(
        "-c",
        "--comment-embedding",
        choices=[SEMANTIC, STATISTIC, START_BYTES],
        default=None,
        help="embedding written into node comments (graph-with-embedding-comments only)",
    )
    pipe.add_argument(
        "-e",
        "--entropy-filter",
        choices=["none", "only-max-entropy"],
        default="none",
    )
    pipe.add_argument(
        "-s",
        "--size-filter",
        choices=["none", "activate"],
        default="none",
    )
    pipe.add_argument(
        "--no-value-node",
        action="store_true",
        help="export the chunk-only reduction instead of the block-level graph",
    )
    pipe.add_argument(
        "--entropy-threshold",
        type=float,
        default=None,
        help="override the data-derived minimum key-chunk entropy",
    )
    pipe.add_argument("--index", type=int, default=0, help="output directory prefix number")
    pipe.add_argument("--depth", type=int, default=8, help="semantic embedding traversal depth")
    pipe.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
