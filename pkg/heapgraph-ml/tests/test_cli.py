"""CLI argument handling and a minimal end-to-end run through main()."""

import json

import pytest

from heapgraph_ml.cli import build_parser, discover_datasets, main
from heapgraph_ml.pipelines import PipelineError

from conftest import write_dataset

TINY_HP = {
    "node2vec_dimensions_range": [8],
    "node2vec_walk_length_range": [5],
    "node2vec_num_walks_range": [4],
    "node2vec_window_range": [3],
    "gcn_training_epochs_range": [2],
    "randomforest_trees_range": [10],
}


def test_parser_requires_input_and_pipelines(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([])
    assert exc.value.code == 2
    assert "--input-dir" in capsys.readouterr().err


def test_parser_rejects_unknown_pipeline(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["-i", "x", "-p", "quantum-pipeline"])
    assert exc.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_parser_defaults():
    args = build_parser().parse_args(["-i", "data", "-p", "gcn-pipeline"])
    assert args.batch == 1
    assert args.nb_input_graphs == 16
    assert args.all_datasets is False
    assert args.quiet is False
    assert str(args.output_dir) == "results"
    assert args.hyperparams is None


def test_parser_accepts_full_paper_launch_line(tmp_path):
    args = build_parser().parse_args(
        [
            "-i", str(tmp_path),
            "-p", "gcn-pipeline", "classic-ml-pipeline", "feature-evaluation-pipeline",
            "-b", "6", "-a", "-q", "-n", "16",
        ]
    )
    assert args.batch == 6
    assert args.all_datasets and args.quiet
    assert len(args.pipelines) == 3


def test_discover_datasets_direct_and_scan(tmp_path):
    write_dataset(tmp_path / "ds1", n_graphs=2)
    write_dataset(tmp_path / "ds2", n_graphs=2)
    (tmp_path / "empty").mkdir()
    assert discover_datasets(tmp_path / "ds1", all_datasets=False) == [tmp_path / "ds1"]
    assert discover_datasets(tmp_path, all_datasets=True) == [
        tmp_path / "ds1",
        tmp_path / "ds2",
    ]
    with pytest.raises(PipelineError, match="no dataset subdirectories"):
        discover_datasets(tmp_path / "empty", all_datasets=True)
    with pytest.raises(PipelineError, match="does not exist"):
        discover_datasets(tmp_path / "nowhere", all_datasets=False)


def test_main_end_to_end_classic(tmp_path, capsys):
    dataset = tmp_path / "ds"
    write_dataset(dataset, n_graphs=3)
    hp = tmp_path / "hp.json"
    hp.write_text(json.dumps(TINY_HP))
    out = tmp_path / "results"
    rc = main(
        [
            "-i", str(dataset),
            "-p", "classic-ml-pipeline",
            "-o", str(out),
            "--hyperparams", str(hp),
            "-q",
        ]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "wrote 9 result row(s)" in captured.out
    assert (out / "classic_ml_pipeline_results.csv").exists()


def test_main_reports_missing_input(tmp_path, capsys):
    rc = main(["-i", str(tmp_path / "absent"), "-p", "classic-ml-pipeline"])
    captured = capsys.readouterr()
    assert rc == 1
    assert "error:" in captured.err


def test_main_reports_bad_hyperparams(tmp_path, capsys):
    dataset = tmp_path / "ds"
    write_dataset(dataset, n_graphs=2)
    hp = tmp_path / "hp.json"
    hp.write_text(json.dumps({"bogus_range": [1]}))
    rc = main(["-i", str(dataset), "-p", "classic-ml-pipeline", "--hyperparams", str(hp)])
    captured = capsys.readouterr()
    assert rc == 1
    assert "unknown hyperparameter keys" in captured.err
