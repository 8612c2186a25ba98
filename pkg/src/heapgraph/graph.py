"""Directed heterogeneous memory graphs over parsed heaps.

Node types:
  CHN  chunk header node, one per recovered malloc chunk
  VN   value node, a user-data block with no pointer value
  PN   pointer node, a user-data block whose value lands back in the heap
  KN   key node, the block at an annotated key address (replaces VN/PN)

Edge labels:
  dts  membership: CHN -> each user-data block node of its chunk
  ptr  a pointer node -> the node at its decoded target address

Node identity is the block address; the printable id is "TYPE(0xaddr)".
The chunk-only reduction keeps one CHN per chunk and draws an edge a -> b
whenever a pointer in a's user data targets any block of b.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass

from .chunks import AnnotationIntegrity, Chunk, apply_annotation, parse_chunks
from .heap_io import BLOCK_SIZE, Annotation, HeapDump
from .pointers import PointerHit, detect_pointers


class NodeType(enum.Enum):
    CHN = "CHN"
    VN = "VN"
    PN = "PN"
    KN = "KN"


@dataclass
class MemNode:
    address: int
    node_type: NodeType
    chunk_index: int | None = None  # 1-based position in the heap, CHN only
    key_letter: str | None = None  # KN, or key-bearing CHN in reduced graphs
    is_pointer: bool = False  # survives KN replacing a PN
    pointer_value: int | None = None
    in_free_chunk: bool = False
    declared: bool = True  # False for nodes known only from edge endpoints

    @property
    def node_id(self) -> str:
        if self.node_type is NodeType.KN:
            return f"KN_KEY_{self.key_letter}(0x{self.address:x})"
        return f"{self.node_type.value}(0x{self.address:x})"

    @property
    def label(self) -> str:
        if self.node_type is NodeType.CHN:
            return f"CHN({self.chunk_index})"
        if self.node_type is NodeType.KN:
            return f"KN({self.key_letter})"
        return self.node_type.value

    def signature(self) -> tuple:
        return (self.address, self.node_type.value, self.chunk_index, self.key_letter)


@dataclass(frozen=True)
class MemEdge:
    src: int
    dst: int
    label: str  # "dts" | "ptr"


DTS = "dts"
PTR = "ptr"


class MemGraph:
    """Strict directed graph (parallel same-label edges collapse)."""

    def __init__(self, name: str, heap_start: int = 0, block_count: int = 0, reduced: bool = False):
        self.name = name
        self.heap_start = heap_start
        self.block_count = block_count
        self.reduced = reduced
        self.nodes: dict[int, MemNode] = {}
        self.edges: list[MemEdge] = []
        self.chunks = []
        # header address -> (pointer members, value members); populated at
        # build time so the chunk-only reduction keeps the counts.
        self.chunk_stats: dict[int, tuple[int, int]] = {}
        self.embedding_type: str | None = None
        self.embeddings: dict[int, object] = {}  # address -> FeatureVector
        self._edge_set: set[tuple[int, int, str]] = set()
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}

    @property
    def chunks(self) -> list[Chunk]:
        return self._chunks

    @chunks.setter
    def chunks(self, value: list[Chunk]) -> None:
        # Keep the by-header lookup in sync: filtered graphs carry a subset
        # of chunks while node.chunk_index still holds the heap ordinal, so
        # positional indexing would dereference the wrong chunk.
        self._chunks = list(value)
        self._chunk_by_header = {c.header_address: c for c in self._chunks}

    def chunk_at_header(self, address: int) -> Chunk | None:
        return self._chunk_by_header.get(address)

    def add_node(self, node: MemNode) -> MemNode:
        existing = self.nodes.get(node.address)
        if existing is not None:
            return existing
        self.nodes[node.address] = node
        return node

    def add_edge(self, src: int, dst: int, label: str) -> bool:
        key = (src, dst, label)
        if key in self._edge_set:
            return False
        self._edge_set.add(key)
        self.edges.append(MemEdge(src, dst, label))
        self._out.setdefault(src, []).append(dst)
        self._in.setdefault(dst, []).append(src)
        return True

    def out_neighbors(self, address: int) -> list[int]:
        return self._out.get(address, [])

    def in_neighbors(self, address: int) -> list[int]:
        return self._in.get(address, [])

    def nodes_by_address(self) -> list[MemNode]:
        return [self.nodes[a] for a in sorted(self.nodes)]

    def edges_sorted(self) -> list[MemEdge]:
        """dts before ptr, then by source and target address."""
        return sorted(self.edges, key=lambda e: (e.label != DTS, e.src, e.dst))

    def nodes_of_type(self, node_type: NodeType) -> list[MemNode]:
        return [n for n in self.nodes_by_address() if n.node_type is node_type]

    def signature(self) -> tuple:
        """Canonical content view used by round-trip tests."""
        return (
            self.name,
            tuple(n.signature() for n in self.nodes_by_address()),
            tuple(sorted(self._edge_set)),
            self.embedding_type,
        )


@dataclass(frozen=True)
class BuildOptions:
    """How a graph gets built from a loaded pair.

    annotate mirrors the chunk-level annotation switch; strict makes
    annotation mismatches (addresses matching no chunk, key bytes not
    matching the dump) fatal instead of recorded warnings.
    """

    annotate: bool = True
    strict: bool = False


class _ChunkIndex:
    """block index -> owning chunk lookup over the sorted chunk list."""

    def __init__(self, chunks: list[Chunk]):
        self._starts = [c.header_block_index for c in chunks]
        self._chunks = chunks

    def owner(self, block_index: int) -> Chunk | None:
        pos = bisect_right(self._starts, block_index) - 1
        if pos < 0:
            return None
        chunk = self._chunks[pos]
        return chunk if chunk.contains_block(block_index) else None


def build_memgraph(
    heap: HeapDump,
    annotation: Annotation | None = None,
    options: BuildOptions = BuildOptions(),
) -> tuple[MemGraph, list[str]]:
    """Build the full block-level graph; returns (graph, warnings).

    Every chunk contributes a CHN at its header address plus one node per
    user-data block (footer excluded: it belongs to the allocator, not to
    the application data).  Pointer targets that fall on blocks without a
    node of their own (footers, gaps between chunks) get a VN on demand so
    that every pointer edge has somewhere to land.
    """
    chunks = parse_chunks(heap)
    hits = detect_pointers(heap)
    warnings: list[str] = []

    if annotation is not None and options.annotate:
        unmatched = apply_annotation(chunks, annotation)
        for addr in unmatched:
            message = f"annotated address 0x{addr:x} matches no chunk start"
            if options.strict:
                raise AnnotationIntegrity(message)
            warnings.append(message)

    graph = MemGraph(
        name=heap.file_id, heap_start=heap.heap_start, block_count=heap.block_count
    )
    graph.chunks = chunks
    index = _ChunkIndex(chunks)

    key_by_addr: dict[int, str] = {}
    key_values: dict[int, bytes] = {}
    if annotation is not None and options.annotate:
        for record in annotation.present_keys:
            key_by_addr[record.addr] = record.letter
            key_values[record.addr] = record.value

    hit_by_block = {hit.block_index: hit for hit in hits}
    pointer_members: list[tuple[MemNode, PointerHit]] = []

    for ordinal, chunk in enumerate(chunks, start=1):
        graph.add_node(
            MemNode(
                address=chunk.header_address,
                node_type=NodeType.CHN,
                chunk_index=ordinal,
                key_letter=chunk.key_letter,
                in_free_chunk=chunk.is_free,
            )
        )
        member_end = min(chunk.footer_block_index, heap.block_count)
        member_pointers = 0
        for block in range(chunk.block_index, member_end):
            addr = heap.block_address(block)
            hit = hit_by_block.get(block)
            letter = key_by_addr.get(addr)
            if letter is not None:
                expected = key_values[addr]
                actual = heap.block(block)
                if actual[: min(BLOCK_SIZE, len(expected))] != expected[:BLOCK_SIZE]:
                    message = f"key {letter} bytes at 0x{addr:x} do not match the dump"
                    if options.strict:
                        raise AnnotationIntegrity(message)
                    warnings.append(message)
                    letter = None
            node_type = (
                NodeType.KN
                if letter is not None
                else (NodeType.PN if hit is not None else NodeType.VN)
            )
            node = graph.add_node(
                MemNode(
                    address=addr,
                    node_type=node_type,
                    key_letter=letter,
                    is_pointer=hit is not None,
                    pointer_value=hit.value if hit is not None else None,
                    in_free_chunk=chunk.is_free,
                )
            )
            graph.add_edge(chunk.header_address, addr, DTS)
            if hit is not None:
                member_pointers += 1
                pointer_members.append((node, hit))
        member_total = max(member_end - chunk.block_index, 0)
        graph.chunk_stats[chunk.header_address] = (
            member_pointers,
            member_total - member_pointers,
        )

    for node, hit in pointer_members:
        target = hit.value
        if target not in graph.nodes:
            owner = index.owner((target - heap.heap_start) // BLOCK_SIZE)
            graph.add_node(
                MemNode(
                    address=target,
                    node_type=NodeType.VN,
                    in_free_chunk=owner.is_free if owner is not None else False,
                )
            )
        graph.add_edge(node.address, target, PTR)

    return graph, warnings


def reduce_to_chunk_graph(graph: MemGraph) -> MemGraph:
    """Collapse to one CHN per chunk.

    An edge a -> b appears when a pointer inside a's user data targets any
    block of b (header and footer included).  Pointers sitting inside free
    chunks are dropped: freed memory no longer speaks for the application.
    """
    reduced = MemGraph(
        name=graph.name,
        heap_start=graph.heap_start,
        block_count=graph.block_count,
        reduced=True,
    )
    reduced.chunks = graph.chunks
    reduced.chunk_stats = dict(graph.chunk_stats)
    index = _ChunkIndex(graph.chunks)

    for ordinal, chunk in enumerate(graph.chunks, start=1):
        reduced.add_node(
            MemNode(
                address=chunk.header_address,
                node_type=NodeType.CHN,
                chunk_index=ordinal,
                key_letter=chunk.key_letter,
                in_free_chunk=chunk.is_free,
            )
        )

    for edge in graph.edges:
        if edge.label != PTR:
            continue
        src_node = graph.nodes[edge.src]
        if src_node.in_free_chunk:
            continue
        src_chunk = index.owner((edge.src - graph.heap_start) // BLOCK_SIZE)
        dst_chunk = index.owner((edge.dst - graph.heap_start) // BLOCK_SIZE)
        if src_chunk is None or dst_chunk is None:
            continue
        reduced.add_edge(src_chunk.header_address, dst_chunk.header_address, PTR)

    return reduced


def prune_to_chunks(graph: MemGraph, kept: list[Chunk]) -> MemGraph:
    """Keep only the given chunks' nodes, plus edge targets they still need.

    A node belongs to the chunk whose span covers its block.  Nodes that
    fall outside every chunk (pointer targets landing in gaps) survive only
    while a kept edge references them.  Edges need a kept source; works on
    full and reduced graphs alike.
    """
    keep_addrs = {chunk.header_address for chunk in kept}
    pruned = MemGraph(
        name=graph.name,
        heap_start=graph.heap_start,
        block_count=graph.block_count,
        reduced=graph.reduced,
    )
    pruned.chunks = kept
    pruned.chunk_stats = {
        addr: stats for addr, stats in graph.chunk_stats.items() if addr in keep_addrs
    }
    index = _ChunkIndex(graph.chunks)

    ownerless: dict[int, MemNode] = {}
    for node in graph.nodes.values():
        if node.node_type is NodeType.CHN:
            if node.address in keep_addrs:
                pruned.add_node(node)
            continue
        owner = index.owner((node.address - graph.heap_start) // BLOCK_SIZE)
        if owner is None:
            ownerless[node.address] = node
        elif owner.header_address in keep_addrs:
            pruned.add_node(node)

    for edge in graph.edges:
        if edge.src not in pruned.nodes:
            continue
        if edge.dst in pruned.nodes:
            pruned.add_edge(edge.src, edge.dst, edge.label)
        elif edge.dst in ownerless:
            pruned.add_node(ownerless[edge.dst])
            pruned.add_edge(edge.src, edge.dst, edge.label)

    return pruned


def label_key_chunks(chunks: list[Chunk], annotation: Annotation) -> list[bool]:
    """Positive label per chunk: its user data starts at a key address."""
    key_addrs = {record.addr for record in annotation.present_keys}
    return [chunk.address in key_addrs for chunk in chunks]


def chunk_member_counts(graph: MemGraph, chunk: Chunk) -> tuple[int, int]:
    """(pointer members, value members) of a chunk, as counted at build."""
    return graph.chunk_stats.get(chunk.header_address, (0, 0))
