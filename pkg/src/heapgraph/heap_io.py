"""Loading of heap dump / annotation pairs and address arithmetic.

A dump pair consists of a raw byte file (``<id>-heap.raw``) and a JSON
annotation file (``<id>.json``).  The two sides use opposite byte orders:
annotation values such as HEAP_START are big-endian hex strings, while
pointers stored inside the dump are little-endian 8-byte words.  Everything
in the dump is addressed in 8-byte blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

BLOCK_SIZE = 8

# Key annotation entries come as KEY_<letter> plus _ADDR/_LEN/_REAL_LEN
# companions.  Observed key byte lengths; 0 means "no such key in this dump".
KNOWN_KEY_LENGTHS = (0, 12, 16, 24, 32, 64)


class HeapError(Exception):
    """Base class for dump loading and consistency problems."""


class BrokenAnnotation(HeapError):
    """Annotation JSON is unreadable, empty, or missing mandatory fields."""


class AddressOutOfRange(HeapError):
    """An address does not fall inside the dump it is supposed to describe."""


def hex_str_to_int(hex_str: str) -> int:
    """Decode a big-endian hex string (the annotation convention).

    >>> hex_str_to_int("56343a198000")
    94782313037824
    """
    return int.from_bytes(bytes.fromhex(hex_str), byteorder="big")


def pointer_str_to_int(block: bytes) -> int:
    """Decode an 8-byte little-endian word (the in-dump convention)."""
    if len(block) != BLOCK_SIZE:
        raise ValueError(f"pointer word must be {BLOCK_SIZE} bytes, got {len(block)}")
    return int.from_bytes(block, byteorder="little")


def is_pointer_aligned(addr: int) -> bool:
    """True when addr sits on an 8-byte boundary.  NULL is the caller's job."""
    return addr % BLOCK_SIZE == 0


def address_to_block_index(addr: int, heap_start: int, heap_size: int) -> int:
    """Map an absolute aligned address to its block index inside the dump."""
    if not is_pointer_aligned(addr):
        raise AddressOutOfRange(f"address 0x{addr:x} is not 8-byte aligned")
    if not heap_start <= addr < heap_start + heap_size:
        raise AddressOutOfRange(
            f"address 0x{addr:x} outside [0x{heap_start:x}, 0x{heap_start + heap_size:x})"
        )
    return (addr - heap_start) // BLOCK_SIZE


def block_index_to_address(block_index: int, heap_start: int) -> int:
    return heap_start + block_index * BLOCK_SIZE


@dataclass(frozen=True)
class KeyRecord:
    """One KEY_<letter> annotation entry.

    value_hex is the key material as a hex string ("" when the session had
    no key in that slot); declared_len / real_len are the annotated byte
    lengths when present.
    """

    letter: str
    addr: int | None
    declared_len: int | None
    real_len: int | None
    value_hex: str

    @property
    def value(self) -> bytes:
        return bytes.fromhex(self.value_hex)

    @property
    def is_present(self) -> bool:
        """A key that actually exists in the dump (non-empty, addressed)."""
        return bool(self.value_hex) and self.addr is not None


@dataclass(frozen=True)
class Annotation:
    """Parsed, range-checked annotation for one dump."""

    heap_start: int
    ssh_struct_addr: int | None
    session_state_addr: int | None
    keys: tuple[KeyRecord, ...]

    def key_by_letter(self, letter: str) -> KeyRecord | None:
        for record in self.keys:
            if record.letter == letter:
                return record
        return None

    @property
    def present_keys(self) -> tuple[KeyRecord, ...]:
        return tuple(k for k in self.keys if k.is_present)


@dataclass(frozen=True)
class HeapDump:
    """A raw dump padded to a whole number of 8-byte blocks."""

    file_id: str
    data: bytes
    heap_start: int
    pad_length: int = 0

    def __post_init__(self) -> None:
        if len(self.data) % BLOCK_SIZE != 0:
            raise ValueError("dump data must be padded to a block multiple")
        if self.heap_start + len(self.data) > 2**64:
            raise AddressOutOfRange("heap extends past the 64-bit address space")

    @property
    def heap_size(self) -> int:
        return len(self.data)

    @property
    def block_count(self) -> int:
        return len(self.data) // BLOCK_SIZE

    def block(self, index: int) -> bytes:
        if not 0 <= index < self.block_count:
            raise AddressOutOfRange(f"block index {index} outside dump")
        return self.data[index * BLOCK_SIZE : (index + 1) * BLOCK_SIZE]

    def block_address(self, index: int) -> int:
        return block_index_to_address(index, self.heap_start)

    def contains_address(self, addr: int) -> bool:
        return self.heap_start <= addr < self.heap_start + self.heap_size


def pad_to_block(data: bytes) -> tuple[bytes, int]:
    """Zero-pad to the next block boundary, returning (padded, pad length)."""
    remainder = len(data) % BLOCK_SIZE
    if remainder == 0:
        return data, 0
    pad = BLOCK_SIZE - remainder
    return data + b"\x00" * pad, pad


def file_id_from_path(raw_path: Path) -> str:
    """``.../5070-1643978841-heap.raw`` -> ``5070-1643978841``."""
    name = raw_path.name
    if name.endswith("-heap.raw"):
        return name[: -len("-heap.raw")]
    return raw_path.stem


def json_path_for(raw_path: Path) -> Path:
    return raw_path.with_name(file_id_from_path(raw_path) + ".json")


def _parse_optional_addr(obj: dict, field_name: str) -> int | None:
    value = obj.get(field_name)
    if value in (None, ""):
        return None
    try:
        return hex_str_to_int(value)
    except (ValueError, TypeError) as exc:
        raise BrokenAnnotation(f"{field_name} is not a hex address: {value!r}") from exc


def _parse_optional_int(obj: dict, field_name: str) -> int | None:
    value = obj.get(field_name)
    if value in (None, ""):
        return None
    try:
        return int(value)
    except (ValueError, TypeError) as exc:
        raise BrokenAnnotation(f"{field_name} is not an integer: {value!r}") from exc


def key_letters(obj: dict) -> list[str]:
    """Distinct key letters mentioned by any KEY_* field, sorted."""
    letters = set()
    for name in obj:
        if not name.startswith("KEY_"):
            continue
        suffix = name[len("KEY_") :]
        letter = suffix.split("_", 1)[0]
        if len(letter) == 1 and letter.isalpha():
            letters.add(letter)
    return sorted(letters)


def annotation_from_json(obj: dict, heap_size: int) -> Annotation:
    """Build a strict Annotation from a raw JSON object.

    Raises BrokenAnnotation for unusable structure and AddressOutOfRange for
    addresses that do not fall inside [heap_start, heap_start + heap_size).
    Only keys that carry a non-empty value are range-checked; empty slots
    are kept as records so callers can still see all annotated letters.
    """
    if not isinstance(obj, dict) or not obj:
        raise BrokenAnnotation("annotation JSON is empty or not an object")
    if "HEAP_START" not in obj:
        raise BrokenAnnotation("annotation lacks HEAP_START")
    try:
        heap_start = hex_str_to_int(obj["HEAP_START"])
    except (ValueError, TypeError) as exc:
        raise BrokenAnnotation(f"HEAP_START is not hex: {obj['HEAP_START']!r}") from exc

    def check_range(addr: int | None, what: str) -> int | None:
        if addr is None:
            return None
        if not heap_start <= addr < heap_start + heap_size:
            raise AddressOutOfRange(f"{what} 0x{addr:x} outside the dump")
        return addr

    ssh_struct = check_range(_parse_optional_addr(obj, "SSH_STRUCT_ADDR"), "SSH_STRUCT_ADDR")
    session_state = check_range(
        _parse_optional_addr(obj, "SESSION_STATE_ADDR"), "SESSION_STATE_ADDR"
    )

    keys = []
    for letter in key_letters(obj):
        base = f"KEY_{letter}"
        value_hex = obj.get(base) or ""
        if not isinstance(value_hex, str):
            raise BrokenAnnotation(f"{base} is not a string")
        try:
            bytes.fromhex(value_hex)
        except ValueError as exc:
            raise BrokenAnnotation(f"{base} is not hex: {value_hex!r}") from exc
        addr = _parse_optional_addr(obj, base + "_ADDR")
        if value_hex:
            check_range(addr, base + "_ADDR")
        keys.append(
            KeyRecord(
                letter=letter,
                addr=addr,
                declared_len=_parse_optional_int(obj, base + "_LEN"),
                real_len=_parse_optional_int(obj, base + "_REAL_LEN"),
                value_hex=value_hex,
            )
        )
    return Annotation(
        heap_start=heap_start,
        ssh_struct_addr=ssh_struct,
        session_state_addr=session_state,
        keys=tuple(keys),
    )


def load_heap_pair(raw_path: Path | str, json_path: Path | str | None = None) -> tuple[HeapDump, Annotation]:
    """Load a dump and its annotation, padding the dump to a block multiple."""
    raw_path = Path(raw_path)
    json_path = Path(json_path) if json_path is not None else json_path_for(raw_path)
    try:
        with open(json_path, "r") as handle:
            obj = json.load(handle)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BrokenAnnotation(f"cannot read annotation {json_path}: {exc}") from exc

    data, pad = pad_to_block(raw_path.read_bytes())
    annotation = annotation_from_json(obj, heap_size=len(data))
    dump = HeapDump(
        file_id=file_id_from_path(raw_path),
        data=data,
        heap_start=annotation.heap_start,
        pad_length=pad,
    )
    return dump, annotation
