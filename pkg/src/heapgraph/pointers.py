"""Pointer detection over the block grid.

A block is a pointer candidate iff its little-endian value lands inside the
dump's own address range [heap_start, heap_start + heap_size) and is 8-byte
aligned.  Zero blocks never qualify.  This is a heuristic: an 8-byte data
value that happens to land in range is indistinguishable from a real
pointer, which is acceptable for graph building.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heap_io import BLOCK_SIZE, HeapDump


@dataclass(frozen=True)
class PointerHit:
    """A block whose value points back into the dump."""

    block_index: int
    value: int
    target_block_index: int


def detect_pointers(heap: HeapDump) -> list[PointerHit]:
    """Scan every block, in block order."""
    values = np.frombuffer(heap.data, dtype="<u8")
    start = np.uint64(heap.heap_start)
    end = np.uint64(heap.heap_start + heap.heap_size)
    mask = (values != 0) & (values >= start) & (values < end) & (values % 8 == 0)
    hits = []
    for index in np.flatnonzero(mask):
        value = int(values[index])
        hits.append(
            PointerHit(
                block_index=int(index),
                value=value,
                target_block_index=(value - heap.heap_start) // BLOCK_SIZE,
            )
        )
    return hits
