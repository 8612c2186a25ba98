"""Malloc chunk recovery from raw heap bytes.

The dumps come from a GLIBC 2.28 main arena.  Every chunk starts with an
8-byte header whose low three bits carry flags and whose remaining bits give
the chunk byte size (header + user data + footer).  A chunk's in-use status
is not stored in its own header: it is the PREV_IN_USE bit of the *next*
chunk's header.  The footer (last block of the chunk) repeats the size, but
only reliably for free chunks; in-use chunks reuse that block for data.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .heap_io import BLOCK_SIZE, Annotation, HeapDump, HeapError

FLAG_PREV_IN_USE = 0x1
FLAG_IS_MMAPPED = 0x2
FLAG_NON_MAIN_ARENA = 0x4
SIZE_MASK = ~0x7
# A chunk needs at least its header and footer blocks.
MIN_CHUNK_SIZE = 2 * BLOCK_SIZE

ZERO_BLOCK = b"\x00" * BLOCK_SIZE


class BrokenChaining(HeapError):
    """The header chain walked off the rails (zero or misaligned size)."""


class AnnotationIntegrity(HeapError):
    """An annotation contradicts the recovered chunk structure."""


@dataclass(frozen=True)
class MallocHeader:
    """Decoded 8-byte chunk header."""

    size: int
    a: bool  # NON_MAIN_ARENA
    m: bool  # IS_MMAPPED
    p: bool  # PREV_IN_USE

    @property
    def size_in_blocks(self) -> int:
        return self.size // BLOCK_SIZE


def parse_malloc_header(block: bytes) -> MallocHeader:
    """Decode a header block: little-endian value, low 3 bits are flags."""
    value = int.from_bytes(block, byteorder="little")
    return MallocHeader(
        size=value & SIZE_MASK,
        a=bool(value & FLAG_NON_MAIN_ARENA),
        m=bool(value & FLAG_IS_MMAPPED),
        p=bool(value & FLAG_PREV_IN_USE),
    )


@dataclass
class Chunk:
    """One recovered chunk.

    block_index is the first user-data block (header index + 1) and address
    is its absolute address, because that is where application data such as
    key material starts.  annotations holds tags like "KEY_A", "SSH_STRUCT"
    or "SESSION_STATE" applied from the dump's annotation file.
    """

    header: MallocHeader
    block_index: int
    address: int
    is_in_use: bool
    has_correct_footer: bool
    is_zero_cropped: bool
    annotations: list[str] = field(default_factory=list)

    @property
    def header_block_index(self) -> int:
        return self.block_index - 1

    @property
    def header_address(self) -> int:
        return self.address - BLOCK_SIZE

    @property
    def byte_size(self) -> int:
        return self.header.size

    @property
    def footer_block_index(self) -> int:
        return self.header_block_index + self.header.size_in_blocks - 1

    @property
    def user_data_block_count(self) -> int:
        """Blocks strictly between header and footer."""
        return self.header.size_in_blocks - 2

    @property
    def user_data_length(self) -> int:
        return self.user_data_block_count * BLOCK_SIZE

    @property
    def is_free(self) -> bool:
        return not self.is_in_use

    @property
    def key_letter(self) -> str | None:
        for tag in self.annotations:
            if tag.startswith("KEY_"):
                return tag[len("KEY_") :]
        return None

    def user_data(self, heap: HeapDump) -> bytes:
        """In-file user-data bytes (may fall short for a cropped chunk)."""
        start = self.block_index * BLOCK_SIZE
        end = min(self.footer_block_index, heap.block_count) * BLOCK_SIZE
        return heap.data[start:end]

    def spanned_data(self, heap: HeapDump) -> bytes:
        """In-file bytes after the header, footer included."""
        start = self.block_index * BLOCK_SIZE
        end = min(self.header_block_index + self.header.size_in_blocks, heap.block_count)
        return heap.data[start : end * BLOCK_SIZE]

    def contains_block(self, block_index: int) -> bool:
        return (
            self.header_block_index
            <= block_index
            < self.header_block_index + self.header.size_in_blocks
        )


def parse_chunks(heap: HeapDump) -> list[Chunk]:
    """Walk the header chain over the whole dump.

    Zero blocks between chunks are skipped silently; the first non-zero
    block is always treated as a header.  A header with size zero, size
    below the header+footer minimum, or a misaligned size kills the walk
    with BrokenChaining.  The final chunk regularly extends past the end of
    the dump; it is marked is_zero_cropped and treated as free, as is any
    chunk whose next header would sit outside the dump.
    """
    data = heap.data
    n = heap.block_count
    chunks: list[Chunk] = []
    index = 0
    while index < n:
        word = data[index * BLOCK_SIZE : (index + 1) * BLOCK_SIZE]
        if word == ZERO_BLOCK:
            index += 1
            continue
        header = parse_malloc_header(word)
        if header.size < MIN_CHUNK_SIZE or header.size % BLOCK_SIZE != 0:
            raise BrokenChaining(
                f"invalid chunk size {header.size} at block {index} "
                f"(header word 0x{int.from_bytes(word, 'little'):x})"
            )
        size_blocks = header.size_in_blocks
        next_index = index + size_blocks
        footer_index = index + size_blocks - 1
        cropped = next_index > n

        if footer_index < n:
            footer_value = int.from_bytes(
                data[footer_index * BLOCK_SIZE : (footer_index + 1) * BLOCK_SIZE],
                byteorder="little",
            )
            correct_footer = (footer_value & SIZE_MASK) == header.size
        else:
            correct_footer = False

        if next_index < n:
            next_word = data[next_index * BLOCK_SIZE : (next_index + 1) * BLOCK_SIZE]
            in_use = bool(int.from_bytes(next_word, "little") & FLAG_PREV_IN_USE)
        else:
            # No next header to ask; the trailing chunk counts as free.
            in_use = False

        chunks.append(
            Chunk(
                header=header,
                block_index=index + 1,
                address=heap.block_address(index + 1),
                is_in_use=in_use,
                has_correct_footer=correct_footer,
                is_zero_cropped=cropped,
            )
        )
        index = next_index
    return chunks


def annotate_chunk(
    chunk: Chunk,
    key_addrs: dict[int, str],
    ssh_struct_addr: int | None = None,
    session_state_addr: int | None = None,
) -> list[str]:
    """Tag a chunk whose user-data start matches an annotated address.

    Keys only ever sit at the very start of an in-use chunk; a key tag on a
    free chunk means either the parse or the annotation is wrong, so that
    raises AnnotationIntegrity instead of tagging.
    """
    applied: list[str] = []
    if chunk.address in key_addrs:
        if not chunk.is_in_use:
            raise AnnotationIntegrity(
                f"key {key_addrs[chunk.address]} annotated on free chunk at 0x{chunk.address:x}"
            )
        applied.append(f"KEY_{key_addrs[chunk.address]}")
    if ssh_struct_addr is not None and chunk.address == ssh_struct_addr:
        applied.append("SSH_STRUCT")
    if session_state_addr is not None and chunk.address == session_state_addr:
        applied.append("SESSION_STATE")
    chunk.annotations.extend(applied)
    return applied


def apply_annotation(chunks: list[Chunk], annotation: Annotation) -> list[int]:
    """Annotate every matching chunk; return annotated addresses with no chunk.

    Only keys with a non-empty value take part: an empty slot (KEY_E == "")
    cannot label anything.
    """
    key_addrs = {k.addr: k.letter for k in annotation.present_keys}
    wanted = set(key_addrs)
    if annotation.ssh_struct_addr is not None:
        wanted.add(annotation.ssh_struct_addr)
    if annotation.session_state_addr is not None:
        wanted.add(annotation.session_state_addr)

    matched: set[int] = set()
    for chunk in chunks:
        applied = annotate_chunk(
            chunk, key_addrs, annotation.ssh_struct_addr, annotation.session_state_addr
        )
        if applied:
            matched.add(chunk.address)
    return sorted(wanted - matched)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass
class ParseStats:
    """Aggregate counters over one or more parsed dumps.

    The two format_* methods reproduce the established statistics block
    layouts line for line, spelling quirks included, because downstream
    tooling greps those exact labels.
    """

    files: int = 0
    skipped_files: int = 0
    chunks: int = 0
    blocks: int = 0
    p_flag_chunks: int = 0
    m_flag_chunks: int = 0
    a_flag_chunks: int = 0
    free_chunks: int = 0
    zero_chunks: int = 0
    blocks_in_free_chunks: int = 0
    correct_footer_chunks: int = 0
    free_correct_footer_chunks: int = 0
    annotated_chunks: int = 0
    annotated_free_chunks: int = 0
    annotated_footer_hits: int = 0
    annotated_in_use_correct_footer: int = 0
    key_annotated_in_use_correct_footer: int = 0
    key_chunk_sizes: Counter = field(default_factory=Counter)

    _SUMMED = (
        "files",
        "skipped_files",
        "chunks",
        "blocks",
        "p_flag_chunks",
        "m_flag_chunks",
        "a_flag_chunks",
        "free_chunks",
        "zero_chunks",
        "blocks_in_free_chunks",
        "correct_footer_chunks",
        "free_correct_footer_chunks",
        "annotated_chunks",
        "annotated_free_chunks",
        "annotated_footer_hits",
        "annotated_in_use_correct_footer",
        "key_annotated_in_use_correct_footer",
    )

    def __add__(self, other: "ParseStats") -> "ParseStats":
        merged = ParseStats()
        for name in self._SUMMED:
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        merged.key_chunk_sizes = self.key_chunk_sizes + other.key_chunk_sizes
        return merged

    def format_file_summary(self) -> str:
        return "\n".join(
            [
                "-----------> Statistics:",
                f"Total number of files: {self.files}",
                f"Total number of chunks: {self.chunks}",
                f"Total number of blocks: {self.blocks}",
                f"Total number of chunks with P=1: {self.p_flag_chunks}",
                f"Total number of chunks with M=1: {self.m_flag_chunks}",
                f"Total number of chunks with A=1: {self.a_flag_chunks}",
                f"Total number of chunks only composed of zeros: {self.zero_chunks}",
            ]
        )

    def format_corpus_summary(self) -> str:
        in_use_chunks = self.chunks - self.free_chunks
        in_use_correct_footer = self.correct_footer_chunks - self.free_correct_footer_chunks
        sizes = sorted(self.key_chunk_sizes)
        size_set = "{" + ", ".join(str(s) for s in sizes) + "}" if sizes else "set()"
        lines = [
            "------> Statistics:",
            f"Total number of parsed files: {self.files}",
            f"Total number of skipped files: {self.skipped_files}",
            f"Total number of chunks: {self.chunks}",
            f"Total number of blocks: {self.blocks}",
            f"Total number of chunks with P=1: {self.p_flag_chunks}",
            f"Total number of chunks with M=1: {self.m_flag_chunks}",
            f"Total number of chunks with A=1: {self.a_flag_chunks}",
            f"Total number of free chunks: {self.free_chunks}",
            f"Total number of chunks only composed of zeros: {self.zero_chunks}",
            f"Total number of blocks in free chunks: {self.blocks_in_free_chunks}",
            f"Total number of chunks with correct footer value: {self.correct_footer_chunks}",
            "Total number of chunks both free and with correct footer value: "
            f"{self.free_correct_footer_chunks}",
            f"Total number of chunks free and annotated: {self.annotated_free_chunks}",
            "Total number of potential footers with annotations (should be 0): "
            f"{self.annotated_footer_hits}",
            f"Total number of annotated chunks: {self.annotated_chunks}",
            "Total number of chunks in use, with correct footer, and annotated: "
            f"{self.annotated_in_use_correct_footer}",
            "Total number of chunks in use, with correct footer, and key annotated: "
            f"{self.key_annotated_in_use_correct_footer}",
            f"Percentage of free chunks: {100 * _ratio(self.free_chunks, self.chunks)}%",
            "Percentage of blocks in free chunks: "
            f"{100 * _ratio(self.blocks_in_free_chunks, self.blocks)}%",
            "Percentage of free chunks with correct footer value: "
            f"{100 * _ratio(self.free_correct_footer_chunks, self.free_chunks)}%",
            "Percentage of in-use chunks with correct footer value: "
            f"{100 * _ratio(in_use_correct_footer, in_use_chunks)}%",
            "Average number of annoted chunks per file: "
            f"{_ratio(self.annotated_chunks, self.files)}",
            "Average number of chunks in use with correct footer and annotated per file: "
            f"{_ratio(self.annotated_in_use_correct_footer, self.files)}",
            f"Set of sizes of key chunks: {size_set}",
            "Sizes of key chunks with their number of occurences:",
        ]
        for size in sizes:
            lines.append(f"Size: {size}  Number of occurences: {self.key_chunk_sizes[size]}")
        lines.append(f"Number of sizes: {sum(self.key_chunk_sizes.values())}")
        lines.append(f"Number of unique sizes: {size_set}")
        return "\n".join(lines)


def chunk_statistics(
    heap: HeapDump, chunks: list[Chunk], annotation: Annotation | None = None
) -> ParseStats:
    """Counters for one parsed dump, combinable with + across a corpus."""
    stats = ParseStats(files=1, chunks=len(chunks), blocks=heap.block_count)
    footer_addrs = set()
    for chunk in chunks:
        if chunk.header.p:
            stats.p_flag_chunks += 1
        if chunk.header.m:
            stats.m_flag_chunks += 1
        if chunk.header.a:
            stats.a_flag_chunks += 1
        if chunk.is_free:
            stats.free_chunks += 1
            spanned_end = min(
                chunk.header_block_index + chunk.header.size_in_blocks, heap.block_count
            )
            stats.blocks_in_free_chunks += spanned_end - chunk.header_block_index
        if chunk.has_correct_footer:
            stats.correct_footer_chunks += 1
            if chunk.is_free:
                stats.free_correct_footer_chunks += 1
        if not any(chunk.user_data(heap)):
            stats.zero_chunks += 1
        if chunk.annotations:
            stats.annotated_chunks += 1
            if chunk.is_free:
                stats.annotated_free_chunks += 1
            if chunk.is_in_use and chunk.has_correct_footer:
                stats.annotated_in_use_correct_footer += 1
        key_letter = chunk.key_letter
        if key_letter is not None:
            stats.key_chunk_sizes[chunk.byte_size] += 1
            if chunk.is_in_use and chunk.has_correct_footer:
                stats.key_annotated_in_use_correct_footer += 1
        if chunk.footer_block_index < heap.block_count:
            footer_addrs.add(heap.block_address(chunk.footer_block_index))

    if annotation is not None:
        annotated_addrs = {k.addr for k in annotation.present_keys}
        if annotation.ssh_struct_addr is not None:
            annotated_addrs.add(annotation.ssh_struct_addr)
        if annotation.session_state_addr is not None:
            annotated_addrs.add(annotation.session_state_addr)
        stats.annotated_footer_hits = len(annotated_addrs & footer_addrs)
    return stats


def format_chunk(chunk: Chunk, ordinal: int) -> str:
    """One chunk in the established debug log line format (1-based index)."""
    flags = f"A={chunk.header.a}, M={chunk.header.m}, P={chunk.header.p}"
    return (
        f"Chunk [{ordinal}]: Chunk(block_index={chunk.block_index}, "
        f"size={chunk.byte_size}, flags=[{flags}])"
    )
