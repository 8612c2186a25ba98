"""Reader and preload cache for the DOT memory-graph wire format.

The graphs come from a separate generator tool; this package deliberately
consumes its files instead of importing it, so this module is the
boundary.  It must accept exactly what the generator writes: nodes
declared in ascending address order, membership edges before pointer
edges, per-node feature vectors in `comment` attributes, NaN for the
degenerate values, and edges naming nodes that were never declared.

Parsing DOT is much slower than unpickling the resulting graph, so
`preload_graphs` persists each parsed graph next to its source and
reuses the pickle while it is fresher than the .gv file.
"""

from __future__ import annotations

import logging
import math
import pickle
import re
from dataclasses import dataclass
from pathlib import Path

import networkx as nx

log = logging.getLogger(__name__)

IDENTIFIER_FIELD = "chn_addr"
FILTER_FIELDS = ("entropy", "size_in_key_sizes")

CACHE_SUFFIX = ".gvpickle"

_HEADER_RE = re.compile(r'^strict digraph "([^"]*)" \{$')
_ID_RE = re.compile(r"^(CHN|VN|PN|KN_KEY_([A-Za-z]))\(0x([0-9a-fA-F]+)\)$")
_EDGE_RE = re.compile(r'^\s*"([^"]+)"\s*->\s*"([^"]+)"\s*\[(.*?)\]\s*;?\s*$')
_NODE_RE = re.compile(r'^\s*"([^"]+)"\s*\[(.*?)\]\s*;?\s*$')
_GRAPH_COMMENT_RE = re.compile(r'^\s*comment="(.*)"\s*;?\s*$')
_ATTR_RE = re.compile(r'(\w+)=("(?:[^"]*)"|[^\s\]]+)')
_META_RE = re.compile(
    r"^\{ 'embedding-type': '([^']*)', 'embedding-fields': \[([^\]]*)\] \}$"
)


class GraphFormatError(ValueError):
    def __init__(self, message: str, line_number: int | None = None):
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)
        self.line_number = line_number


@dataclass
class MemoryGraph:
    """One loaded graph plus the metadata the pipelines need."""

    name: str
    path: str
    graph: nx.DiGraph
    embedding_type: str | None = None
    embedding_fields: tuple[str, ...] | None = None

    @property
    def node_addresses(self) -> list[int]:
        return sorted(self.graph.nodes)

    @property
    def chn_addresses(self) -> list[int]:
        """Chunk header nodes, ascending: the classification universe.

        Only these carry feature vectors and a key/non-key ground truth;
        value, pointer and key nodes exist for structure alone.
        """
        return [
            a for a in self.node_addresses if self.graph.nodes[a]["node_type"] == "CHN"
        ]

    @property
    def labels(self) -> list[int]:
        """1 for key chunks, aligned with chn_addresses."""
        return [
            1 if self.graph.nodes[a]["key_letter"] is not None else 0
            for a in self.chn_addresses
        ]

    @property
    def positive_count(self) -> int:
        return sum(self.labels)


def _parse_node_id(node_id: str, line_number: int) -> tuple[str, int, str | None]:
    match = _ID_RE.match(node_id)
    if match is None:
        raise GraphFormatError(f"unrecognized node id {node_id!r}", line_number)
    kind, key_letter, addr_hex = match.groups()
    node_type = "KN" if kind.startswith("KN_KEY_") else kind
    return node_type, int(addr_hex, 16), key_letter


def _parse_vector(raw: str, line_number: int) -> list[float]:
    if not (raw.startswith("[") and raw.endswith("]")):
        raise GraphFormatError(f"malformed vector comment {raw!r}", line_number)
    body = raw[1:-1].strip()
    if not body:
        return []
    values = []
    for token in body.split(","):
        token = token.strip()
        try:
            values.append(float(token))
        except ValueError:
            raise GraphFormatError(f"bad vector value {token!r}", line_number) from None
    return values


def _attrs(text: str) -> dict[str, str]:
    return {k: v.strip('"') for k, v in _ATTR_RE.findall(text)}


def parse_graph_text(text: str, path: str = "<memory>") -> MemoryGraph:
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError("empty input")
    header = _HEADER_RE.match(lines[0])
    if header is None:
        raise GraphFormatError(f"bad header {lines[0]!r}", 1)

    record = MemoryGraph(name=header.group(1), path=path, graph=nx.DiGraph())

    def ensure_node(node_id: str, line_number: int, declared: bool) -> int:
        node_type, address, key_letter = _parse_node_id(node_id, line_number)
        if address not in record.graph:
            record.graph.add_node(
                address,
                node_type=node_type,
                key_letter=key_letter,
                vector=None,
                declared=declared,
            )
        elif declared:
            record.graph.nodes[address]["declared"] = True
        return address

    for number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped == "}":
            break

        comment = _GRAPH_COMMENT_RE.match(line)
        if comment is not None and "->" not in line and not line.lstrip().startswith('"'):
            meta = _META_RE.match(comment.group(1).strip())
            if meta is None:
                raise GraphFormatError("unparseable graph comment", number)
            record.embedding_type = meta.group(1)
            record.embedding_fields = tuple(
                token.strip().strip("'") for token in meta.group(2).split(",") if token.strip()
            )
            continue

        edge = _EDGE_RE.match(line)
        if edge is not None:
            src = ensure_node(edge.group(1), number, declared=False)
            dst = ensure_node(edge.group(2), number, declared=False)
            label = _attrs(edge.group(3)).get("label")
            if label not in ("dts", "ptr"):
                raise GraphFormatError(f"bad edge label {label!r}", number)
            record.graph.add_edge(src, dst, label=label)
            continue

        node = _NODE_RE.match(line)
        if node is not None:
            address = ensure_node(node.group(1), number, declared=True)
            attrs = _attrs(node.group(2))
            if "key" in attrs:
                record.graph.nodes[address]["key_letter"] = attrs["key"]
            if "comment" in attrs:
                vector = _parse_vector(attrs["comment"], number)
                record.graph.nodes[address]["vector"] = vector
            continue

        raise GraphFormatError(f"unparseable line {stripped!r}", number)
    else:
        raise GraphFormatError("missing closing brace")

    _check_vectors(record)
    return record


def _check_vectors(record: MemoryGraph) -> None:
    """Every stored vector must match the declared field list.

    NaN entries are the generator's encoding for degenerate chunks (zero
    byte variance); they become 0.0 here.  Infinities are corruption.
    """
    fields = record.embedding_fields
    if fields is not None:
        for address, data in record.graph.nodes(data=True):
            if data["node_type"] == "CHN" and data["vector"] is None:
                raise GraphFormatError(
                    f"chunk node 0x{address:x} lacks a feature vector"
                )
    for address in record.graph.nodes:
        vector = record.graph.nodes[address]["vector"]
        if vector is None:
            continue
        if fields is None:
            raise GraphFormatError(
                f"node 0x{address:x} carries a vector but the graph declares no fields"
            )
        if len(vector) != len(fields):
            raise GraphFormatError(
                f"node 0x{address:x} has {len(vector)} values for {len(fields)} fields"
            )
        if any(math.isinf(v) for v in vector):
            raise GraphFormatError(f"node 0x{address:x} vector is not finite")
        record.graph.nodes[address]["vector"] = [
            0.0 if math.isnan(v) else v for v in vector
        ]


def load_graph_file(path: Path | str) -> MemoryGraph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc}") from exc
    return parse_graph_text(text, path=str(path))


def _cache_path(gv_path: Path) -> Path:
    return gv_path.with_suffix(CACHE_SUFFIX)


def load_cached(gv_path: Path | str) -> MemoryGraph:
    """Load one graph, going through the pickle cache."""
    gv_path = Path(gv_path)
    cached = _cache_path(gv_path)
    if cached.exists() and cached.stat().st_mtime >= gv_path.stat().st_mtime:
        with cached.open("rb") as handle:
            return pickle.load(handle)
    record = load_graph_file(gv_path)
    with cached.open("wb") as handle:
        pickle.dump(record, handle, protocol=pickle.HIGHEST_PROTOCOL)
    return record


def dataset_files(dataset_dir: Path | str) -> list[Path]:
    return sorted(Path(dataset_dir).glob("*.gv"))


def preload_graphs(
    dataset_dirs: list[Path | str], limit: int | None = None, quiet: bool = False
) -> tuple[list[MemoryGraph], int]:
    """Load and check up to `limit` graphs per dataset dir.

    Unreadable or inconsistent graphs are skipped and counted, not fatal:
    a generation-side bug should surface as a skip count, without taking
    the whole sweep down.
    """
    records: list[MemoryGraph] = []
    skipped = 0
    for dataset_dir in dataset_dirs:
        files = dataset_files(dataset_dir)
        if limit is not None:
            files = files[:limit]
        for gv_path in files:
            try:
                records.append(load_cached(gv_path))
            except (GraphFormatError, pickle.PickleError) as exc:
                skipped += 1
                if not quiet:
                    log.warning("skipping %s: %s", gv_path, exc)
    if not quiet:
        log.info(
            "%d total graphs in the input dataset dir paths have been loaded and checked.",
            len(records),
        )
        log.info("%d total graphs have been skipped.", skipped)
    return records, skipped
