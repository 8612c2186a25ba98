"""Shared fixtures: a hand-assembled heap small enough to reason about.

The tiny heap below is written word by word, independently of the synth
module, so parser tests have an oracle that shares no code with the thing
under test.  Layout (18 blocks, heap_start 0x1000):

    b0   zeros                      (leading gap)
    b1   header 33  = size 32, P=1  chunk 1, in use
    b2     0x1038                   pointer to b7
    b3     0x0102030405060708       value, far out of range
    b4     0                        footer (in use, unused)
    b5   header 33  = size 32, P=1  chunk 2, in use, key chunk
    b6     "AAAAAAAA"               key bytes, first half
    b7     "AAAAAAAA"               key bytes, second half
    b8     0                        footer
    b9   header 41  = size 40, P=1  chunk 3, FREE
    b10    0x1010                   pointer to b2 (allocator noise)
    b11    0
    b12    0
    b13    40                       free footer, correct
    b14  header 16  = size 16, P=0  chunk 4, in use, no user data
    b15    0                        footer
    b16  header 33  = size 32, P=1  cropped sentinel chunk
    b17    0                        tail
"""

from __future__ import annotations

import pytest

from heapgraph import Annotation, HeapDump, annotation_from_json

TINY_HEAP_START = 0x1000
TINY_BLOCKS = 18
TINY_KEY_VALUE = b"A" * 16

TINY_WORDS: dict[int, int] = {
    1: 33,
    2: 0x1038,
    3: 0x0102030405060708,
    5: 33,
    6: int.from_bytes(b"A" * 8, "little"),
    7: int.from_bytes(b"A" * 8, "little"),
    9: 41,
    10: 0x1010,
    13: 40,
    14: 16,
    16: 33,
}

TINY_ANNOTATION_JSON = {
    "HEAP_START": "1000",
    "KEY_A": TINY_KEY_VALUE.hex(),
    "KEY_A_ADDR": "1030",
    "KEY_A_LEN": "16",
    "KEY_A_REAL_LEN": "16",
    "SSH_STRUCT_ADDR": "1010",
    "SESSION_STATE_ADDR": "1010",
}


def build_heap(
    words: dict[int, int],
    n_blocks: int,
    heap_start: int = TINY_HEAP_START,
    file_id: str = "tiny-0",
) -> HeapDump:
    data = bytearray(n_blocks * 8)
    for block, value in words.items():
        data[block * 8 : (block + 1) * 8] = value.to_bytes(8, "little")
    return HeapDump(file_id=file_id, data=bytes(data), heap_start=heap_start, pad_length=0)


@pytest.fixture
def tiny_heap() -> HeapDump:
    return build_heap(TINY_WORDS, TINY_BLOCKS, TINY_HEAP_START, "tiny-0")


@pytest.fixture
def tiny_annotation(tiny_heap: HeapDump) -> Annotation:
    return annotation_from_json(TINY_ANNOTATION_JSON, heap_size=tiny_heap.heap_size)
