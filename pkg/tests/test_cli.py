"""CLI behavior through main(argv): exit codes and printed contracts."""

import json
import random

import pytest

from heapgraph.cli import main
from heapgraph.synth import (
    ChunkSpec,
    KeyPlant,
    SynthHeapSpec,
    random_synth_spec,
    write_synth_pair,
)

from conftest import TINY_ANNOTATION_JSON, TINY_BLOCKS, TINY_WORDS


def write_tiny_pair(root):
    data = bytearray(TINY_BLOCKS * 8)
    for block, value in TINY_WORDS.items():
        data[block * 8 : (block + 1) * 8] = value.to_bytes(8, "little")
    (root / "77-1-heap.raw").write_bytes(bytes(data))
    (root / "77-1.json").write_text(json.dumps(TINY_ANNOTATION_JSON))
    return root / "77-1-heap.raw"


def test_check_annotations(tmp_path, capsys):
    raw = write_tiny_pair(tmp_path)
    bad = dict(TINY_ANNOTATION_JSON)
    bad["KEY_B"] = ""
    (tmp_path / "77-2.json").write_text(json.dumps(bad))
    (tmp_path / "77-2-heap.raw").write_bytes(raw.read_bytes())

    clean = tmp_path / "clean"
    rc = main(["check-annotations", str(tmp_path), "--clean-dir", str(clean)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "Number of Correct and Complete Files: 1 files" in out
    assert "Number of Missing key Files: 1 files" in out
    assert "Number of SSH keys: 2 keys" in out
    assert "Number of missing (empty) SSH keys: 1 keys" in out
    assert (clean / "77-1.json").exists()
    assert not (clean / "77-2.json").exists()


def test_check_annotations_drop_broken(tmp_path, capsys):
    write_tiny_pair(tmp_path)
    broken_raw = bytearray(64)
    broken_raw[0:8] = (9).to_bytes(8, "little")  # size below minimum
    (tmp_path / "88-1-heap.raw").write_bytes(bytes(broken_raw))
    (tmp_path / "88-1.json").write_text(json.dumps({"HEAP_START": "1000",
                                                    "SSH_STRUCT_ADDR": "1008",
                                                    "SESSION_STATE_ADDR": "1008"}))
    clean = tmp_path / "clean"
    rc = main([
        "check-annotations", str(tmp_path),
        "--clean-dir", str(clean),
        "--drop-broken-chaining",
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "Dropped 1 file(s) with broken chunk chaining:" in out
    assert "88-1" in out
    assert not (clean / "88-1.json").exists()
    assert (clean / "77-1.json").exists()


def test_drop_broken_requires_clean_dir(tmp_path, capsys):
    write_tiny_pair(tmp_path)
    rc = main(["check-annotations", str(tmp_path), "--drop-broken-chaining"])
    captured = capsys.readouterr()
    assert rc == 2
    assert "--clean-dir" in captured.err


def test_parse_chunks_single_file(tmp_path, capsys):
    raw = write_tiny_pair(tmp_path)
    rc = main(["parse-chunks", str(raw), "--debug"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "Chunk [1]: Chunk(block_index=2, size=32, flags=[A=False, M=False, P=True])"
    assert lines[4] == "Chunk [5]: Chunk(block_index=17, size=32, flags=[A=False, M=False, P=True])"
    assert "-----------> Statistics:" in lines
    assert "Total number of chunks: 5" in lines
    assert "Total number of blocks: 18" in lines


def test_parse_chunks_directory(tmp_path, capsys):
    write_tiny_pair(tmp_path)
    rng = random.Random(3)
    write_synth_pair(tmp_path, random_synth_spec(rng, file_id="78-1"))
    rc = main(["parse-chunks", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert f"Input is directory: {tmp_path}" in out
    assert f"Found 2 files in {tmp_path}." in out
    assert "------> Statistics:" in out
    assert "Total number of parsed files: 2" in out
    assert "Total number of skipped files: 0" in out
    assert "Average number of annoted chunks per file:" in out


def test_parse_chunks_error(tmp_path, capsys):
    missing = tmp_path / "nope-heap.raw"
    rc = main(["parse-chunks", str(missing)])
    captured = capsys.readouterr()
    assert rc == 1
    assert "error:" in captured.err


def test_scan_pointers(tmp_path, capsys):
    raw = write_tiny_pair(tmp_path)
    rc = main(["scan-pointers", str(raw)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.splitlines() == [
        "2 0x1038",
        "10 0x1010",
        "2 potential pointer(s) in 18 blocks",
    ]


def test_pipeline_subcommand(tmp_path, capsys):
    corpus = tmp_path / "in"
    corpus.mkdir()
    spec = SynthHeapSpec(
        chunks=[ChunkSpec(48, in_use=True), ChunkSpec(24, in_use=False)],
        file_id="5-1",
        keys=[KeyPlant(letter="A", chunk=0, value=bytes(range(16, 40)))],
        ssh_struct_chunk=0,
        session_state_chunk=0,
    )
    write_synth_pair(corpus, spec)
    out_root = tmp_path / "out"
    rc = main([
        "pipeline", "graph-with-embedding-comments",
        "-i", str(corpus),
        "-o", str(out_root),
        "-v",
        "-a", "chunk-header-node",
        "-c", "chunk-semantic-embedding",
        "-e", "none",
        "-s", "none",
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "processed 1 file(s), skipped 0" in out
    expected_dir = (
        "0_graph_with_embedding_comments_-v_-a_chunk-header-node"
        "_-c_chunk-semantic-embedding_-e_none_-s_none"
    )
    assert (out_root / expected_dir / "5-1.gv").exists()


def test_pipeline_usage_error(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    rc = main([
        "pipeline", "graph",
        "-i", str(tmp_path / "in"),
        "-o", str(tmp_path / "out"),
    ])
    captured = capsys.readouterr()
    assert rc == 2
    assert "error:" in captured.err


def test_pipeline_all_skipped_returns_one(tmp_path, capsys):
    corpus = tmp_path / "in"
    corpus.mkdir()
    (corpus / "9-1-heap.raw").write_bytes(bytes(64))
    rc = main([
        "pipeline", "graph",
        "-i", str(corpus),
        "-o", str(tmp_path / "out"),
        "-v",
    ])
    capsys.readouterr()
    assert rc == 1  # the lone file was skipped (no annotation)


def test_rejects_unknown_embedding_choice(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main([
            "pipeline", "graph",
            "-i", str(tmp_path),
            "-o", str(tmp_path),
            "-c", "bogus-embedding",
        ])
    assert exc.value.code == 2
    capsys.readouterr()
