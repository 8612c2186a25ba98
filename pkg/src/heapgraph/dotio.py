"""DOT (graphviz) serialization of memory graphs.

The wire format is deliberately rigid so files diff cleanly and parse with
a line-oriented reader:

    strict digraph "<name>" {
        comment="{ 'embedding-type': '...', 'embedding-fields': [...] }";
        "CHN(0x55..)" [label="CHN(1)" color="cyan" style=filled shape=square];
        "CHN(0x55..)" -> "VN(0x55..)" [label="dts" weight=1]
    }

Nodes are written in ascending address order, dts edges before ptr edges.
Feature vectors ride in per-node comment attributes as bracketed value
lists; degenerate statistic vectors serialize their non-basic values as
NaN, which the parser folds back to 0.0 with the degenerate flag set.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .embeddings import BASIC_FIELDS, FILTER_FIELDS, FeatureVector
from .graph import DTS, PTR, MemEdge, MemGraph, MemNode, NodeType
from .heap_io import HeapError

NODE_COLORS = {
    NodeType.CHN: "cyan",
    NodeType.VN: "grey",
    NodeType.PN: "orange",
    NodeType.KN: "green",
}
NODE_SHAPES = {NodeType.CHN: "square", NodeType.PN: "hexagon"}


class DotParseError(HeapError):
    def __init__(self, message: str, line_number: int | None = None):
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)
        self.line_number = line_number


_ID_RE = re.compile(r"^(CHN|VN|PN|KN_KEY_([A-Za-z]))\(0x([0-9a-fA-F]+)\)$")
_HEADER_RE = re.compile(r'^strict digraph "([^"]*)" \{$')
_EDGE_RE = re.compile(r'^\s*"([^"]+)"\s*->\s*"([^"]+)"\s*\[(.*?)\]\s*;?\s*$')
_NODE_RE = re.compile(r'^\s*"([^"]+)"\s*\[(.*?)\]\s*;?\s*$')
_GRAPH_COMMENT_RE = re.compile(r'^\s*comment="(.*)"\s*;?\s*$')
_ATTR_RE = re.compile(r'(\w+)=("(?:[^"]*)"|[^\s\]]+)')


def _format_value(value: float) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    as_float = float(value)
    if math.isnan(as_float):
        return "NaN"
    if as_float.is_integer() and abs(as_float) < 2**53:
        # Counts and byte values travel as integers even if computed as floats.
        return str(int(as_float))
    return repr(as_float)


def serialize_vector(vector: FeatureVector) -> str:
    """Bracketed comma list; NaN for degenerate non-basic, non-extra fields."""
    keep = set(BASIC_FIELDS) | set(vector.extra_fields)
    parts = []
    for name, value in zip(vector.field_names, vector.values):
        if vector.degenerate and name not in keep:
            parts.append("NaN")
        else:
            parts.append(_format_value(value))
    return "[" + ",".join(parts) + "]"


def _graph_comment(vector_fields: tuple[str, ...], embedding_type: str) -> str:
    quoted = ",".join(f"'{name}'" for name in vector_fields)
    return f"{{ 'embedding-type': '{embedding_type}', 'embedding-fields': [{quoted}] }}"


def export_dot(graph: MemGraph) -> str:
    """Deterministic DOT text for a graph, embeddings included if present."""
    lines = [f'strict digraph "{graph.name}" {{']

    embedding_fields: tuple[str, ...] | None = None
    if graph.embedding_type is not None and graph.embeddings:
        vectors = list(graph.embeddings.values())
        embedding_fields = vectors[0].field_names
        for vector in vectors:
            if vector.field_names != embedding_fields:
                raise ValueError("inconsistent embedding fields within one graph")
        lines.append(f'    comment="{_graph_comment(embedding_fields, graph.embedding_type)}";')

    for node in graph.nodes_by_address():
        color = NODE_COLORS[node.node_type]
        if node.node_type is NodeType.CHN and node.key_letter is not None:
            color = "green"
        attrs = [f'label="{node.label}"', f'color="{color}"', "style=filled"]
        shape = NODE_SHAPES.get(node.node_type)
        if shape is not None:
            attrs.append(f"shape={shape}")
        if node.node_type is NodeType.CHN and node.key_letter is not None:
            attrs.append(f'key="{node.key_letter}"')
        vector = graph.embeddings.get(node.address)
        if vector is not None:
            attrs.append(f'comment="{serialize_vector(vector)}"')
        lines.append(f'    "{node.node_id}" [{" ".join(attrs)}];')

    for edge in graph.edges_sorted():
        src = graph.nodes[edge.src].node_id
        dst = graph.nodes[edge.dst].node_id
        lines.append(f'    "{src}" -> "{dst}" [label="{edge.label}" weight=1]')

    lines.append("}")
    return "\n".join(lines) + "\n"


def _parse_node_id(node_id: str, line_number: int) -> tuple[NodeType, int, str | None]:
    match = _ID_RE.match(node_id)
    if match is None:
        raise DotParseError(f"unknown node id format {node_id!r}", line_number)
    type_token, letter, addr_hex = match.groups()
    node_type = NodeType.KN if type_token.startswith("KN_KEY_") else NodeType[type_token]
    return node_type, int(addr_hex, 16), letter


def _parse_attrs(text: str) -> dict[str, str]:
    attrs = {}
    for name, raw in _ATTR_RE.findall(text):
        attrs[name] = raw[1:-1] if raw.startswith('"') else raw
    return attrs


def _parse_graph_comment(raw: str, line_number: int) -> tuple[str, tuple[str, ...]]:
    try:
        obj = json.loads(raw.replace("'", '"'))
    except json.JSONDecodeError as exc:
        raise DotParseError(f"bad graph comment: {exc}", line_number) from exc
    try:
        return obj["embedding-type"], tuple(obj["embedding-fields"])
    except (KeyError, TypeError) as exc:
        raise DotParseError("graph comment lacks embedding keys", line_number) from exc


def _parse_vector_values(raw: str, line_number: int) -> list[float]:
    body = raw.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise DotParseError(f"node comment is not a vector: {raw!r}", line_number)
    values = []
    inner = body[1:-1].strip()
    if not inner:
        return values
    for token in inner.split(","):
        token = token.strip()
        if token == "NaN":
            values.append(math.nan)
            continue
        try:
            values.append(int(token))
        except ValueError:
            try:
                values.append(float(token))
            except ValueError as exc:
                raise DotParseError(f"bad vector value {token!r}", line_number) from exc
    return values


@dataclass
class DotDocument:
    """A parsed DOT file: nodes, edges, and any embedded feature vectors."""

    name: str = ""
    nodes: dict[int, MemNode] = field(default_factory=dict)
    edges: list[MemEdge] = field(default_factory=list)
    declared_node_ids: list[str] = field(default_factory=list)
    embedding_type: str | None = None
    embedding_fields: tuple[str, ...] | None = None
    vectors: dict[int, FeatureVector] = field(default_factory=dict)

    @property
    def declared_node_count(self) -> int:
        return len(self.declared_node_ids)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def nodes_of_type(self, node_type: NodeType) -> list[MemNode]:
        return [n for n in self.nodes.values() if n.node_type is node_type]

    def to_graph(self) -> MemGraph:
        graph = MemGraph(name=self.name)
        for address in sorted(self.nodes):
            graph.add_node(self.nodes[address])
        for edge in self.edges:
            graph.add_edge(edge.src, edge.dst, edge.label)
        graph.embedding_type = self.embedding_type
        graph.embeddings = dict(self.vectors)
        return graph


def _vector_from_values(
    embedding_type: str, names: tuple[str, ...], values: list[float], line_number: int
) -> FeatureVector:
    if len(values) != len(names):
        raise DotParseError(
            f"vector has {len(values)} values for {len(names)} declared fields", line_number
        )
    degenerate = any(isinstance(v, float) and math.isnan(v) for v in values)
    cleaned = tuple(0.0 if isinstance(v, float) and math.isnan(v) else v for v in values)
    extras = []
    for name in reversed(names):
        if name in FILTER_FIELDS:
            extras.append(name)
        else:
            break
    return FeatureVector(
        embedding_type=embedding_type,
        field_names=names,
        values=cleaned,
        extra_fields=tuple(reversed(extras)),
        degenerate=degenerate,
    )


def parse_dot(text: str) -> DotDocument:
    """Parse wire-format DOT back into a document.

    Edges may reference nodes that were never declared (rendering tools
    accept that); such nodes are created from their id with declared left
    False so counts of declared statements stay available.
    """
    doc = DotDocument()
    lines = text.splitlines()
    if not lines:
        raise DotParseError("empty input")

    header = _HEADER_RE.match(lines[0].strip())
    if header is None:
        raise DotParseError(f"missing digraph header: {lines[0]!r}", 1)
    doc.name = header.group(1)

    def ensure_node(node_id: str, line_number: int, declared: bool) -> MemNode:
        node_type, address, letter = _parse_node_id(node_id, line_number)
        node = doc.nodes.get(address)
        if node is None:
            node = MemNode(
                address=address, node_type=node_type, key_letter=letter, declared=declared
            )
            doc.nodes[address] = node
        return node

    closed = False
    edge_seen: set[tuple[int, int, str]] = set()
    for line_number, raw_line in enumerate(lines[1:], start=2):
        line = raw_line.strip()
        if not line:
            continue
        if line == "}":
            closed = True
            continue
        if closed:
            raise DotParseError("content after closing brace", line_number)

        comment_match = _GRAPH_COMMENT_RE.match(line)
        if comment_match is not None and "->" not in line:
            doc.embedding_type, doc.embedding_fields = _parse_graph_comment(
                comment_match.group(1), line_number
            )
            continue

        edge_match = _EDGE_RE.match(line)
        if edge_match is not None:
            src_id, dst_id, attr_text = edge_match.groups()
            src = ensure_node(src_id, line_number, declared=False)
            dst = ensure_node(dst_id, line_number, declared=False)
            attrs = _parse_attrs(attr_text)
            label = attrs.get("label", "")
            if label not in (DTS, PTR):
                raise DotParseError(f"unknown edge label {label!r}", line_number)
            key = (src.address, dst.address, label)
            if key not in edge_seen:
                edge_seen.add(key)
                doc.edges.append(MemEdge(src.address, dst.address, label))
            continue

        node_match = _NODE_RE.match(line)
        if node_match is not None:
            node_id, attr_text = node_match.groups()
            node = ensure_node(node_id, line_number, declared=True)
            if not node.declared:
                node.declared = True
            doc.declared_node_ids.append(node_id)
            attrs = _parse_attrs(attr_text)
            label = attrs.get("label", "")
            if node.node_type is NodeType.CHN and label.startswith("CHN("):
                try:
                    node.chunk_index = int(label[4:-1])
                except ValueError:
                    pass
            if node.node_type is NodeType.CHN and "key" in attrs:
                node.key_letter = attrs["key"]
            if "comment" in attrs:
                if doc.embedding_fields is None:
                    raise DotParseError(
                        "node carries a vector but the graph declared no fields", line_number
                    )
                values = _parse_vector_values(attrs["comment"], line_number)
                doc.vectors[node.address] = _vector_from_values(
                    doc.embedding_type or "", doc.embedding_fields, values, line_number
                )
            continue

        raise DotParseError(f"unparseable statement: {line!r}", line_number)

    if not closed:
        raise DotParseError("missing closing brace", len(lines))
    return doc


def graphs_equivalent(a: MemGraph, b: MemGraph) -> bool:
    """Same nodes (type, letter, chunk index), edges, and vectors."""
    if a.signature() != b.signature():
        return False
    if set(a.embeddings) != set(b.embeddings):
        return False
    for address, vector in a.embeddings.items():
        other = b.embeddings[address]
        if (
            vector.field_names != other.field_names
            or vector.values != other.values
            or vector.degenerate != other.degenerate
            or vector.extra_fields != other.extra_fields
            or vector.embedding_type != other.embedding_type
        ):
            return False
    return True
