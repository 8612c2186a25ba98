"""Annotation quality control over a corpus of dump pairs.

Annotations were produced by a best-effort logging harness, so before any
labeling they get sorted into quality buckets: files that cannot be parsed
at all, files with incorrect values, files with incomplete key entries, and
files whose key slots are empty.  Only files that are correct AND complete
survive into a cleaned dataset; a final pass drops files whose chunk chain
is broken.
"""

from __future__ import annotations

import enum
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .chunks import BrokenChaining, parse_chunks
from .heap_io import (
    BLOCK_SIZE,
    BrokenAnnotation,
    HeapError,
    key_letters,
    load_heap_pair,
)

MANDATORY_FIELDS = ("HEAP_START", "SSH_STRUCT_ADDR", "SESSION_STATE_ADDR")


class KeyVerdict(enum.Enum):
    VALID = "valid"
    MISSING = "missing"
    INCOMPLETE = "incomplete"
    INCORRECT = "incorrect"


class FileCategory(enum.Enum):
    CORRECT_COMPLETE = "correct_complete"
    BROKEN = "broken"
    INCORRECT = "incorrect"
    INCOMPLETE_KEY = "incomplete_key"
    MISSING_KEY = "missing_key"


def _parse_hex(value) -> int | None:
    if not isinstance(value, str) or not value:
        return None
    try:
        return int.from_bytes(bytes.fromhex(value), "big")
    except ValueError:
        return None


def is_hex_address_correct(value, heap_start: int | None, heap_size: int) -> bool:
    """A usable address: parses as hex and lands inside the dump."""
    addr = _parse_hex(value)
    if addr is None or heap_start is None:
        return False
    return heap_start <= addr < heap_start + heap_size


def validate_key_entry(
    obj: dict, base_key: str, heap_start: int | None, heap_size: int
) -> KeyVerdict:
    """Check one KEY_<letter> entry against its companion fields.

    Empty (or absent) value -> missing.  Any companion of _ADDR/_LEN/
    _REAL_LEN absent -> incomplete.  Unusable address, non-numeric or
    negative length, or value length disagreeing with the declared length
    -> incorrect.  A declared length of zero with all fields present is
    still a missing key: that slot holds no material.
    """
    value = obj.get(base_key) or ""
    if len(value) == 0:
        return KeyVerdict.MISSING
    for companion in ("_ADDR", "_LEN", "_REAL_LEN"):
        if base_key + companion not in obj:
            return KeyVerdict.INCOMPLETE
    if not is_hex_address_correct(obj[base_key + "_ADDR"], heap_start, heap_size):
        return KeyVerdict.INCORRECT
    try:
        declared_len = int(obj[base_key + "_LEN"])
    except (TypeError, ValueError):
        return KeyVerdict.INCORRECT
    if declared_len < 0:
        return KeyVerdict.INCORRECT
    if declared_len == 0:
        return KeyVerdict.MISSING
    if len(value) != declared_len * 2:
        return KeyVerdict.INCORRECT
    return KeyVerdict.VALID


@dataclass
class ValidationReport:
    """Outcome of validating one annotation object."""

    heap_start_present: bool = False
    heap_start_ok: bool = False
    ssh_struct_present: bool = False
    ssh_struct_ok: bool = False
    session_state_present: bool = False
    session_state_ok: bool = False
    valid_keys: int = 0
    missing_keys: int = 0
    incomplete_keys: int = 0
    incorrect_keys: int = 0
    key_verdicts: dict[str, KeyVerdict] = field(default_factory=dict)

    @property
    def mandatory_ok(self) -> bool:
        return self.heap_start_ok and self.ssh_struct_ok and self.session_state_ok

    @property
    def counters(self) -> tuple[int, int, int]:
        return (self.incorrect_keys, self.missing_keys, self.incomplete_keys)

    @property
    def category(self) -> FileCategory:
        mandatory_present = (
            self.heap_start_present and self.ssh_struct_present and self.session_state_present
        )
        invalid_present = (
            (self.heap_start_present and not self.heap_start_ok)
            or (self.ssh_struct_present and not self.ssh_struct_ok)
            or (self.session_state_present and not self.session_state_ok)
        )
        if self.incorrect_keys > 0 or invalid_present:
            return FileCategory.INCORRECT
        if self.incomplete_keys > 0 or not mandatory_present:
            return FileCategory.INCOMPLETE_KEY
        if self.missing_keys > 0:
            return FileCategory.MISSING_KEY
        return FileCategory.CORRECT_COMPLETE


def validate_annotation(obj: dict, heap_size: int) -> ValidationReport:
    """Validate every mandatory field and every KEY_* entry of one file."""
    report = ValidationReport()
    report.heap_start_present = "HEAP_START" in obj
    heap_start = _parse_hex(obj.get("HEAP_START"))
    report.heap_start_ok = heap_start is not None

    report.ssh_struct_present = "SSH_STRUCT_ADDR" in obj
    report.ssh_struct_ok = report.ssh_struct_present and is_hex_address_correct(
        obj.get("SSH_STRUCT_ADDR"), heap_start, heap_size
    )
    report.session_state_present = "SESSION_STATE_ADDR" in obj
    report.session_state_ok = report.session_state_present and is_hex_address_correct(
        obj.get("SESSION_STATE_ADDR"), heap_start, heap_size
    )

    for letter in key_letters(obj):
        verdict = validate_key_entry(obj, f"KEY_{letter}", heap_start, heap_size)
        report.key_verdicts[letter] = verdict
        if verdict is KeyVerdict.VALID:
            report.valid_keys += 1
        elif verdict is KeyVerdict.MISSING:
            report.missing_keys += 1
        elif verdict is KeyVerdict.INCOMPLETE:
            report.incomplete_keys += 1
        else:
            report.incorrect_keys += 1
    return report


@dataclass
class CorpusReport:
    """Classification of every dump pair under a directory tree."""

    counts: dict[FileCategory, int] = field(
        default_factory=lambda: {category: 0 for category in FileCategory}
    )
    files: dict[FileCategory, list[str]] = field(
        default_factory=lambda: {category: [] for category in FileCategory}
    )
    valid_keys: int = 0
    missing_keys: int = 0
    incomplete_keys: int = 0
    incorrect_keys: int = 0

    @property
    def total_files(self) -> int:
        return sum(self.counts.values())

    def format_summary(self) -> str:
        # Label wording is a CLI output contract; downstream tooling greps it.
        lines = [
            f"Number of Correct and Complete Files: {self.counts[FileCategory.CORRECT_COMPLETE]} files",
            f"Number of Broken Files: {self.counts[FileCategory.BROKEN]} files",
            f"Number of Incorrect Files: {self.counts[FileCategory.INCORRECT]} files",
            f"Number of Missing key Files: {self.counts[FileCategory.MISSING_KEY]} files",
            f"Number of Incomplete key Files: {self.counts[FileCategory.INCOMPLETE_KEY]} files",
            "",
            f"Number of SSH keys: {self.valid_keys} keys",
            f"Number of missing (empty) SSH keys: {self.missing_keys} keys",
            f"Number of incompletely annotated SSH keys: {self.incomplete_keys} keys",
            f"Number of incorrectly annotated SSH keys: {self.incorrect_keys} keys",
        ]
        return "\n".join(lines)


def iter_pairs(root: Path) -> list[tuple[Path, Path]]:
    """All (json, raw) pairs under root, sorted for determinism."""
    pairs = []
    for json_path in sorted(root.rglob("*.json")):
        raw_path = json_path.with_name(json_path.stem + "-heap.raw")
        if raw_path.exists():
            pairs.append((json_path, raw_path))
    return pairs


def classify_file(json_path: Path, raw_path: Path) -> tuple[FileCategory, ValidationReport | None]:
    try:
        with open(json_path, "r") as handle:
            obj = json.load(handle)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError):
        return FileCategory.BROKEN, None
    if not isinstance(obj, dict) or not obj:
        return FileCategory.BROKEN, None
    raw_size = raw_path.stat().st_size
    heap_size = raw_size + (-raw_size) % BLOCK_SIZE
    report = validate_annotation(obj, heap_size)
    return report.category, report


def classify_corpus(root: Path | str, clean_dir: Path | str | None = None) -> CorpusReport:
    """Bucket every pair under root; optionally copy the keepers.

    clean_dir, when given, receives a copy of every CORRECT_COMPLETE pair
    with the directory layout preserved.
    """
    root = Path(root)
    clean_root = Path(clean_dir) if clean_dir is not None else None
    corpus = CorpusReport()
    for json_path, raw_path in iter_pairs(root):
        category, report = classify_file(json_path, raw_path)
        corpus.counts[category] += 1
        corpus.files[category].append(json_path.stem)
        if report is not None:
            corpus.valid_keys += report.valid_keys
            corpus.missing_keys += report.missing_keys
            corpus.incomplete_keys += report.incomplete_keys
            corpus.incorrect_keys += report.incorrect_keys
        if category is FileCategory.CORRECT_COMPLETE and clean_root is not None:
            target_dir = clean_root / json_path.parent.relative_to(root)
            target_dir.mkdir(parents=True, exist_ok=True)
            shutil.copy2(json_path, target_dir / json_path.name)
            shutil.copy2(raw_path, target_dir / raw_path.name)
    return corpus


def drop_broken_chaining(clean_dir: Path | str) -> list[str]:
    """Delete pairs whose chunk chain cannot be walked; return their ids.

    Meant for a cleaned corpus produced by classify_corpus, where every
    annotation already loads; files that still fail to load are dropped too
    and reported the same way.
    """
    removed = []
    for json_path, raw_path in iter_pairs(Path(clean_dir)):
        try:
            heap, _ = load_heap_pair(raw_path, json_path)
            parse_chunks(heap)
        except (BrokenChaining, HeapError, BrokenAnnotation):
            removed.append(json_path.stem)
            json_path.unlink()
            raw_path.unlink()
    return removed
