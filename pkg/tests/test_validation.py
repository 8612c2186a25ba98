"""Annotation quality buckets, exercised per entry, per file, and per tree."""

import json

from heapgraph.validation import (
    CorpusReport,
    FileCategory,
    KeyVerdict,
    classify_corpus,
    classify_file,
    drop_broken_chaining,
    is_hex_address_correct,
    validate_annotation,
    validate_key_entry,
)

from conftest import TINY_ANNOTATION_JSON, TINY_BLOCKS, TINY_WORDS

HEAP_SIZE = 1024
OK = {"HEAP_START": "1000", "SSH_STRUCT_ADDR": "1010", "SESSION_STATE_ADDR": "1010"}


def entry(value="aa" * 16, addr="1030", length="16", real="16", **extra):
    obj = dict(OK)
    obj["KEY_A"] = value
    if addr is not None:
        obj["KEY_A_ADDR"] = addr
    if length is not None:
        obj["KEY_A_LEN"] = length
    if real is not None:
        obj["KEY_A_REAL_LEN"] = real
    obj.update(extra)
    return obj


def test_hex_address_correct():
    assert is_hex_address_correct("1010", 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct("0fff", 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct("1400", 0x1000, HEAP_SIZE)  # one past the end
    assert is_hex_address_correct("13ff", 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct("zz", 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct("", 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct(None, 0x1000, HEAP_SIZE)
    assert not is_hex_address_correct("1010", None, HEAP_SIZE)


def test_key_verdicts():
    check = lambda obj: validate_key_entry(obj, "KEY_A", 0x1000, HEAP_SIZE)
    assert check(entry()) is KeyVerdict.VALID
    assert check(entry(value="")) is KeyVerdict.MISSING
    assert check({**OK}) is KeyVerdict.MISSING  # absent entirely
    assert check(entry(addr=None)) is KeyVerdict.INCOMPLETE
    assert check(entry(length=None)) is KeyVerdict.INCOMPLETE
    assert check(entry(real=None)) is KeyVerdict.INCOMPLETE
    assert check(entry(addr="9999")) is KeyVerdict.INCORRECT  # out of range
    assert check(entry(addr="xx")) is KeyVerdict.INCORRECT
    assert check(entry(length="abc")) is KeyVerdict.INCORRECT
    assert check(entry(length="-4")) is KeyVerdict.INCORRECT
    assert check(entry(length="0")) is KeyVerdict.MISSING  # declared empty slot
    assert check(entry(length="99")) is KeyVerdict.INCORRECT  # value length clash


def test_category_precedence():
    # incorrect beats incomplete beats missing
    obj = entry(addr="ffff", KEY_B="bb", KEY_C="")
    report = validate_annotation(obj, HEAP_SIZE)
    assert report.incorrect_keys == 1  # A: bad address
    assert report.incomplete_keys == 1  # B: companions absent
    assert report.missing_keys == 1  # C: empty value
    assert report.category is FileCategory.INCORRECT

    obj = entry(KEY_B="bb", KEY_C="")
    assert validate_annotation(obj, HEAP_SIZE).category is FileCategory.INCOMPLETE_KEY

    obj = entry(KEY_C="")
    assert validate_annotation(obj, HEAP_SIZE).category is FileCategory.MISSING_KEY

    assert validate_annotation(entry(), HEAP_SIZE).category is FileCategory.CORRECT_COMPLETE


def test_mandatory_field_handling():
    obj = entry()
    del obj["SSH_STRUCT_ADDR"]
    report = validate_annotation(obj, HEAP_SIZE)
    assert not report.mandatory_ok
    # an absent mandatory field reads as incomplete, not incorrect
    assert report.category is FileCategory.INCOMPLETE_KEY

    obj = entry(SSH_STRUCT_ADDR="ffffff")
    report = validate_annotation(obj, HEAP_SIZE)
    assert report.ssh_struct_present and not report.ssh_struct_ok
    assert report.category is FileCategory.INCORRECT

    report = validate_annotation(entry(), HEAP_SIZE)
    assert report.mandatory_ok
    assert report.counters == (0, 0, 0)


def _write_pair(root, stem, obj, raw=bytes(TINY_BLOCKS * 8)):
    (root / f"{stem}.json").write_text(json.dumps(obj))
    (root / f"{stem}-heap.raw").write_bytes(raw)


def test_classify_file_broken(tmp_path):
    (tmp_path / "1-1.json").write_text("{ not json")
    (tmp_path / "1-1-heap.raw").write_bytes(bytes(64))
    category, report = classify_file(tmp_path / "1-1.json", tmp_path / "1-1-heap.raw")
    assert category is FileCategory.BROKEN and report is None

    (tmp_path / "2-1.json").write_text("[]")
    (tmp_path / "2-1-heap.raw").write_bytes(bytes(64))
    category, _ = classify_file(tmp_path / "2-1.json", tmp_path / "2-1-heap.raw")
    assert category is FileCategory.BROKEN


def test_classify_corpus_and_clean_copy(tmp_path):
    src = tmp_path / "src"
    sub = src / "training" / "scp" / "v_8_8_p1" / "32"
    sub.mkdir(parents=True)
    _write_pair(sub, "1000-1", entry())
    _write_pair(sub, "1000-2", entry(KEY_E=""))
    _write_pair(sub, "1000-3", entry(addr="ffffffff"))
    (sub / "1000-4.json").write_text("boom")
    (sub / "1000-4-heap.raw").write_bytes(bytes(16))
    # a json without its raw sibling is not a pair at all
    (sub / "1000-5.json").write_text(json.dumps(entry()))

    clean = tmp_path / "clean"
    corpus = classify_corpus(src, clean_dir=clean)
    assert corpus.total_files == 4
    assert corpus.counts[FileCategory.CORRECT_COMPLETE] == 1
    assert corpus.counts[FileCategory.MISSING_KEY] == 1
    assert corpus.counts[FileCategory.INCORRECT] == 1
    assert corpus.counts[FileCategory.BROKEN] == 1
    assert corpus.files[FileCategory.CORRECT_COMPLETE] == ["1000-1"]
    # nested layout is preserved in the cleaned copy
    copied = clean / "training" / "scp" / "v_8_8_p1" / "32"
    assert sorted(p.name for p in copied.iterdir()) == ["1000-1-heap.raw", "1000-1.json"]


def test_format_summary_labels():
    corpus = CorpusReport()
    corpus.counts[FileCategory.CORRECT_COMPLETE] = 26196
    corpus.counts[FileCategory.BROKEN] = 6
    corpus.counts[FileCategory.INCORRECT] = 0
    corpus.counts[FileCategory.MISSING_KEY] = 58643
    corpus.counts[FileCategory.INCOMPLETE_KEY] = 18750
    corpus.valid_keys = 4
    lines = corpus.format_summary().splitlines()
    assert lines[0] == "Number of Correct and Complete Files: 26196 files"
    assert lines[1] == "Number of Broken Files: 6 files"
    assert lines[2] == "Number of Incorrect Files: 0 files"
    assert lines[3] == "Number of Missing key Files: 58643 files"
    assert lines[4] == "Number of Incomplete key Files: 18750 files"
    assert lines[5] == ""
    assert lines[6] == "Number of SSH keys: 4 keys"
    assert lines[7] == "Number of missing (empty) SSH keys: 0 keys"
    assert lines[8] == "Number of incompletely annotated SSH keys: 0 keys"
    assert lines[9] == "Number of incorrectly annotated SSH keys: 0 keys"


def _tiny_raw() -> bytes:
    data = bytearray(TINY_BLOCKS * 8)
    for block, value in TINY_WORDS.items():
        data[block * 8 : (block + 1) * 8] = value.to_bytes(8, "little")
    return bytes(data)


def test_drop_broken_chaining(tmp_path):
    # pair one parses fine; pair two has a header with size below minimum
    _write_pair(tmp_path, "7-1", TINY_ANNOTATION_JSON, raw=_tiny_raw())
    bad = bytearray(64)
    bad[0:8] = (9).to_bytes(8, "little")
    _write_pair(tmp_path, "7-2", dict(TINY_ANNOTATION_JSON), raw=bytes(bad))

    removed = drop_broken_chaining(tmp_path)
    assert removed == ["7-2"]
    assert not (tmp_path / "7-2.json").exists()
    assert not (tmp_path / "7-2-heap.raw").exists()
    assert (tmp_path / "7-1.json").exists()
