"""Command line front end.

Points at one dataset directory of .gv files (or, with -a, a directory
of such dataset directories) and runs the requested pipelines over it.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .hyperparams import HyperparamError, load_hyperparams
from .pipelines import PIPELINE_NAMES, PipelineError, run_datasets

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heapgraph-ml",
        description="train and evaluate key-chunk classifiers on memory graph datasets",
    )
    parser.add_argument(
        "-i",
        "--input-dir",
        required=True,
        type=Path,
        help="dataset directory of .gv files, or a parent of datasets with -a",
    )
    parser.add_argument(
        "-p",
        "--pipelines",
        nargs="+",
        required=True,
        choices=PIPELINE_NAMES,
        help="pipelines to run",
    )
    parser.add_argument(
        "-b",
        "--batch",
        type=int,
        default=1,
        help="worker processes for experiment execution (default 1: serial)",
    )
    parser.add_argument(
        "-a",
        "--all-datasets",
        action="store_true",
        help="treat every subdirectory of the input that contains .gv files as a dataset",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="reduce log output")
    parser.add_argument(
        "-n",
        "--nb-input-graphs",
        type=int,
        default=16,
        help="max graphs loaded per dataset (default 16)",
    )
    parser.add_argument(
        "-o",
        "--output-dir",
        type=Path,
        default=Path("results"),
        help="directory for results CSVs and heatmaps (default ./results)",
    )
    parser.add_argument(
        "--hyperparams",
        type=Path,
        default=None,
        help="JSON file of hyperparameter ranges; missing keys fall back to defaults",
    )
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    return parser


def discover_datasets(input_dir: Path, all_datasets: bool) -> list[Path]:
    if not input_dir.is_dir():
        raise PipelineError(f"input dir does not exist: {input_dir}")
    if not all_datasets:
        return [input_dir]
    found = sorted(
        child for child in input_dir.iterdir() if child.is_dir() and any(child.glob("*.gv"))
    )
    if not found:
        raise PipelineError(f"no dataset subdirectories with .gv files under {input_dir}")
    return found


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        ranges = load_hyperparams(args.hyperparams)
        datasets = discover_datasets(args.input_dir, args.all_datasets)
        summary = run_datasets(
            dataset_dirs=datasets,
            pipelines=args.pipelines,
            ranges=ranges,
            output_dir=args.output_dir,
            graph_limit=args.nb_input_graphs,
            batch=args.batch,
            seed=args.seed,
            quiet=args.quiet,
        )
    except (HyperparamError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary.rows_written} result row(s), "
        f"{len(summary.heatmaps)} heatmap(s); "
        f"skipped {summary.skipped_graphs} graph(s), "
        f"{len(summary.skipped_datasets)} dataset(s); "
        f"{summary.degenerate_runs} degenerate run(s)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
