"""Synthetic heap construction with byte-exact layout and ground truth.

Builds dumps that follow the allocator conventions the parser relies on:
one leading zero block, headers whose PREV_IN_USE bit reflects the previous
chunk's status, size-valued footers for free chunks, and (by default) a
final cropped chunk of zeros so the last real chunk's status stays
readable.  Pointers, keys, and arbitrary noise words can be planted at
chosen blocks; the returned ground truth states exactly what a correct
parse and scan must recover.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .heap_io import (
    BLOCK_SIZE,
    Annotation,
    HeapDump,
    annotation_from_json,
)

DEFAULT_HEAP_START = 0x56343A198000


class SynthConstructionError(ValueError):
    """The requested heap layout cannot exist."""


@dataclass(frozen=True)
class ChunkSpec:
    size: int
    in_use: bool = True
    a: bool = False
    m: bool = False
    fill: bytes | None = None  # user-data fill, zero-padded; footer excluded


@dataclass(frozen=True)
class KeyPlant:
    letter: str
    chunk: int  # index into SynthHeapSpec.chunks
    value: bytes
    declared_len: int | None = None
    real_len: int | None = None


@dataclass(frozen=True)
class PointerPlant:
    block_index: int
    target_block: int


@dataclass(frozen=True)
class WordPlant:
    block_index: int
    value: int


@dataclass
class SynthHeapSpec:
    chunks: list[ChunkSpec]
    file_id: str = "synth-0"
    heap_start: int = DEFAULT_HEAP_START
    leading_zero_blocks: int = 1
    trailing: str = "cropped"  # "cropped" | "zeros" | "end"
    trailing_blocks: int = 4
    pointers: list[PointerPlant] = field(default_factory=list)
    words: list[WordPlant] = field(default_factory=list)
    keys: list[KeyPlant] = field(default_factory=list)
    ssh_struct_chunk: int | None = None
    session_state_chunk: int | None = None


@dataclass(frozen=True)
class TrueChunk:
    header_block: int
    size: int
    a: bool
    m: bool
    p: bool
    in_use: bool
    is_sentinel: bool = False

    @property
    def user_block(self) -> int:
        return self.header_block + 1


@dataclass
class SynthGroundTruth:
    chunks: list[TrueChunk]
    pointer_targets: dict[int, int]  # source block -> target block
    noise_blocks: list[int]
    key_addrs: dict[str, int]
    block_count: int
    annotation_json: dict[str, str] = field(default_factory=dict)

    @property
    def real_chunks(self) -> list[TrueChunk]:
        return [c for c in self.chunks if not c.is_sentinel]


def _chunk_layout(spec: SynthHeapSpec) -> list[int]:
    """Header block index per chunk (sentinel excluded)."""
    positions = []
    cursor = spec.leading_zero_blocks
    for chunk in spec.chunks:
        positions.append(cursor)
        cursor += chunk.size // BLOCK_SIZE
    return positions


def plan_block_count(spec: SynthHeapSpec) -> int:
    """Total dump size in blocks for a given spec."""
    positions = _chunk_layout(spec)
    cursor = (
        positions[-1] + spec.chunks[-1].size // BLOCK_SIZE if positions else spec.leading_zero_blocks
    )
    if spec.trailing == "cropped":
        return cursor + 1 + spec.trailing_blocks
    if spec.trailing == "zeros":
        return cursor + spec.trailing_blocks
    return cursor


def synth_heap(spec: SynthHeapSpec) -> tuple[HeapDump, Annotation, SynthGroundTruth]:
    if not spec.chunks:
        raise SynthConstructionError("need at least one chunk")
    for i, chunk in enumerate(spec.chunks):
        if chunk.size < 16 or chunk.size % BLOCK_SIZE != 0:
            raise SynthConstructionError(f"chunk {i} has invalid size {chunk.size}")
    if spec.trailing not in ("cropped", "zeros", "end"):
        raise SynthConstructionError(f"unknown trailing mode {spec.trailing!r}")
    if spec.trailing in ("zeros", "end") and spec.chunks[-1].in_use:
        raise SynthConstructionError(
            "an in-use final chunk needs a cropped tail to encode its status"
        )
    if spec.trailing == "zeros" and spec.trailing_blocks < 1:
        raise SynthConstructionError("trailing zeros need at least one block")

    positions = _chunk_layout(spec)
    n = plan_block_count(spec)
    data = bytearray(n * BLOCK_SIZE)
    owner: dict[int, str] = {}  # block -> reason it is taken

    def claim(block: int, reason: str) -> None:
        if not 0 <= block < n:
            raise SynthConstructionError(f"{reason} at block {block} outside dump of {n}")
        if block in owner:
            raise SynthConstructionError(
                f"{reason} collides with {owner[block]} at block {block}"
            )
        owner[block] = reason

    def write_word(block: int, value: int) -> None:
        data[block * BLOCK_SIZE : (block + 1) * BLOCK_SIZE] = value.to_bytes(
            BLOCK_SIZE, "little"
        )

    truth_chunks: list[TrueChunk] = []
    for i, chunk in enumerate(spec.chunks):
        header_block = positions[i]
        p_flag = True if i == 0 else spec.chunks[i - 1].in_use
        claim(header_block, f"chunk {i} header")
        write_word(
            header_block,
            chunk.size | (0x4 if chunk.a else 0) | (0x2 if chunk.m else 0) | (0x1 if p_flag else 0),
        )
        footer_block = header_block + chunk.size // BLOCK_SIZE - 1
        claim(footer_block, f"chunk {i} footer")
        if not chunk.in_use:
            write_word(footer_block, chunk.size)
        if chunk.fill is not None:
            user_bytes = chunk.size - 2 * BLOCK_SIZE
            if len(chunk.fill) > user_bytes:
                raise SynthConstructionError(
                    f"chunk {i} fill of {len(chunk.fill)} exceeds {user_bytes} user bytes"
                )
            start = (header_block + 1) * BLOCK_SIZE
            data[start : start + len(chunk.fill)] = chunk.fill
        truth_chunks.append(
            TrueChunk(
                header_block=header_block,
                size=chunk.size,
                a=chunk.a,
                m=chunk.m,
                p=p_flag,
                in_use=chunk.in_use,
            )
        )

    if spec.trailing == "cropped":
        sentinel_block = positions[-1] + spec.chunks[-1].size // BLOCK_SIZE
        sentinel_size = (spec.trailing_blocks + 2) * BLOCK_SIZE
        claim(sentinel_block, "sentinel header")
        write_word(sentinel_block, sentinel_size | (0x1 if spec.chunks[-1].in_use else 0))
        truth_chunks.append(
            TrueChunk(
                header_block=sentinel_block,
                size=sentinel_size,
                a=False,
                m=False,
                p=spec.chunks[-1].in_use,
                in_use=False,
                is_sentinel=True,
            )
        )

    key_addrs: dict[str, int] = {}
    annotation_obj: dict[str, str] = {"HEAP_START": f"{spec.heap_start:x}"}
    for plant in spec.keys:
        chunk = spec.chunks[plant.chunk]
        if not chunk.in_use:
            raise SynthConstructionError(f"key {plant.letter} planted in a free chunk")
        if len(plant.value) > chunk.size - 2 * BLOCK_SIZE:
            raise SynthConstructionError(
                f"key {plant.letter} of {len(plant.value)} bytes exceeds chunk capacity"
            )
        user_block = positions[plant.chunk] + 1
        for offset in range((len(plant.value) + BLOCK_SIZE - 1) // BLOCK_SIZE):
            claim(user_block + offset, f"key {plant.letter}")
        start = user_block * BLOCK_SIZE
        data[start : start + len(plant.value)] = plant.value
        addr = spec.heap_start + user_block * BLOCK_SIZE
        key_addrs[plant.letter] = addr
        base = f"KEY_{plant.letter}"
        declared = plant.declared_len if plant.declared_len is not None else len(plant.value)
        real = plant.real_len if plant.real_len is not None else len(plant.value)
        annotation_obj[base] = plant.value.hex()
        annotation_obj[base + "_ADDR"] = f"{addr:x}"
        annotation_obj[base + "_LEN"] = str(declared)
        annotation_obj[base + "_REAL_LEN"] = str(real)

    pointer_targets: dict[int, int] = {}
    for plant in spec.pointers:
        if not 0 <= plant.target_block < n:
            raise SynthConstructionError(f"pointer target block {plant.target_block} outside dump")
        claim(plant.block_index, "pointer")
        write_word(plant.block_index, spec.heap_start + plant.target_block * BLOCK_SIZE)
        pointer_targets[plant.block_index] = plant.target_block

    noise_blocks: list[int] = []
    heap_end = spec.heap_start + n * BLOCK_SIZE
    for plant in spec.words:
        claim(plant.block_index, "noise word")
        if plant.value != 0 and spec.heap_start <= plant.value < heap_end and plant.value % 8 == 0:
            raise SynthConstructionError(
                f"noise word at block {plant.block_index} decodes as an in-range pointer"
            )
        write_word(plant.block_index, plant.value)
        noise_blocks.append(plant.block_index)

    def chunk_addr_hex(index: int | None) -> str | None:
        if index is None:
            return None
        if not spec.chunks[index].in_use:
            raise SynthConstructionError("struct annotations belong to in-use chunks")
        return f"{spec.heap_start + (positions[index] + 1) * BLOCK_SIZE:x}"

    ssh_hex = chunk_addr_hex(spec.ssh_struct_chunk)
    if ssh_hex is not None:
        annotation_obj["SSH_STRUCT_ADDR"] = ssh_hex
    session_hex = chunk_addr_hex(spec.session_state_chunk)
    if session_hex is not None:
        annotation_obj["SESSION_STATE_ADDR"] = session_hex

    heap = HeapDump(
        file_id=spec.file_id, data=bytes(data), heap_start=spec.heap_start, pad_length=0
    )
    annotation = annotation_from_json(annotation_obj, heap_size=len(data))
    truth = SynthGroundTruth(
        chunks=truth_chunks,
        pointer_targets=pointer_targets,
        noise_blocks=noise_blocks,
        key_addrs=key_addrs,
        block_count=n,
        annotation_json=annotation_obj,
    )
    return heap, annotation, truth


def write_synth_pair(directory: Path | str, spec: SynthHeapSpec) -> tuple[Path, Path]:
    """Write <file_id>-heap.raw and <file_id>.json; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    heap, _, truth = synth_heap(spec)
    raw_path = directory / f"{spec.file_id}-heap.raw"
    json_path = directory / f"{spec.file_id}.json"
    raw_path.write_bytes(heap.data)
    json_path.write_text(json.dumps(truth.annotation_json, indent=4))
    return raw_path, json_path


def _masked_random_bytes(rng: random.Random, length: int) -> bytes:
    """Random bytes that can never scan as in-range pointers.

    The high byte of every 8-byte word is forced to 0xFF, far above any
    plausible user-space heap address, so planted pointers stay the only
    pointer-shaped content.
    """
    raw = bytearray(rng.randbytes(length))
    for i in range(7, length, BLOCK_SIZE):
        raw[i] = 0xFF
    return bytes(raw)


KEY_CAPABLE_SIZES = (32, 48, 64)
KEY_LENGTHS = (12, 16, 24, 32)


def random_synth_spec(
    rng: random.Random,
    file_id: str = "synth-0",
    min_chunks: int = 3,
    max_chunks: int = 20,
    with_keys: bool = True,
) -> SynthHeapSpec:
    """A randomized but always-consistent spec for round-trip testing."""
    chunk_count = rng.randint(min_chunks, max_chunks)
    chunks = []
    for _ in range(chunk_count):
        if rng.random() < 0.5:
            size = rng.choice(KEY_CAPABLE_SIZES)
        else:
            size = 8 * rng.randint(2, 32)
        in_use = rng.random() < 0.7
        chunks.append(
            ChunkSpec(
                size=size,
                in_use=in_use,
                a=rng.random() < 0.05,
                m=rng.random() < 0.05,
            )
        )

    spec = SynthHeapSpec(
        chunks=chunks,
        file_id=file_id,
        heap_start=DEFAULT_HEAP_START + 0x1000 * rng.randint(0, 4096),
        trailing="cropped",
        trailing_blocks=rng.randint(0, 6),
    )
    positions = _chunk_layout(spec)
    n = plan_block_count(spec)

    # Free member blocks (header and footer excluded) available for plants.
    open_blocks = []
    for position, chunk in zip(positions, chunks):
        open_blocks.extend(range(position + 1, position + chunk.size // BLOCK_SIZE - 1))
    rng.shuffle(open_blocks)

    def take(count: int) -> list[int]:
        return [open_blocks.pop() for _ in range(min(count, len(open_blocks)))]

    pointers = [
        PointerPlant(block_index=block, target_block=rng.randrange(n))
        for block in take(rng.randint(0, 6))
    ]

    words = []
    heap_end = spec.heap_start + n * BLOCK_SIZE
    out_of_range = [
        spec.heap_start - BLOCK_SIZE,
        heap_end,
        heap_end + 0x100000,
        rng.randrange(1, 0x10000) * 8,  # small values: sizes, counters
        (1 << 64) - 8,
    ]
    misaligned = spec.heap_start + rng.randrange(n) * BLOCK_SIZE + rng.randint(1, 7)
    candidates = out_of_range + [misaligned]
    for block in take(rng.randint(0, 5)):
        words.append(WordPlant(block_index=block, value=rng.choice(candidates)))

    keys = []
    if with_keys:
        lettered = iter("ABCDEF")
        for index, (position, chunk) in enumerate(zip(positions, chunks)):
            if len(keys) >= 3:
                break
            if not chunk.in_use or chunk.size not in KEY_CAPABLE_SIZES:
                continue
            user_start = position + 1
            span = [b for b in range(user_start, position + chunk.size // BLOCK_SIZE - 1)]
            if any(b not in open_blocks for b in span):
                continue
            length = rng.choice([l for l in KEY_LENGTHS if l <= chunk.size - 2 * BLOCK_SIZE])
            for b in span:
                open_blocks.remove(b)
            keys.append(
                KeyPlant(letter=next(lettered), chunk=index, value=_masked_random_bytes(rng, length))
            )

    in_use_chunks = [i for i, chunk in enumerate(chunks) if chunk.in_use]
    ssh_struct = rng.choice(in_use_chunks) if in_use_chunks else None
    session_state = rng.choice(in_use_chunks) if in_use_chunks else None

    return SynthHeapSpec(
        chunks=chunks,
        file_id=file_id,
        heap_start=spec.heap_start,
        trailing=spec.trailing,
        trailing_blocks=spec.trailing_blocks,
        pointers=pointers,
        words=words,
        keys=keys,
        ssh_struct_chunk=ssh_struct,
        session_state_chunk=session_state,
    )
