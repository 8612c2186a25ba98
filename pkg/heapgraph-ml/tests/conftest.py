"""Shared fixtures: synthetic DOT text and a real exported dataset.

Most tests run on graphs written directly in the wire format by
`synth_dot`, with a deliberately small field list.  A handful of
integration tests consume `exported_dataset`, which drives the actual
generator CLI over hand-built heap dumps, so reader changes that drift
from the real format fail loudly.
"""

from __future__ import annotations

import json
import random
import shutil
import subprocess
from pathlib import Path

import pytest

SEM_TYPE = "chunk-semantic-embedding"

# Small stand-in field list with the same envelope as the real one:
# identifier first (sorted there too), filter features trailing.
SEM_FIELDS = (
    "chn_addr",
    "chunk_byte_size",
    "chunk_ptrs",
    "chunk_vns",
    "entropy",
    "size_in_key_sizes",
)
LEARNING_WIDTH = 3  # SEM_FIELDS minus identifier minus the two trailing extras

KEY_LETTERS = "ABCDEF"


def synth_dot(
    name: str,
    n_chunks: int = 6,
    key_every: int = 3,
    seed: int = 0,
    semantic: bool = True,
    undeclared_ptr: bool = False,
    nan_in: int | None = None,
    base: int = 0x10000,
) -> str:
    """Wire-format graph text: chunk nodes with child blocks and some pointers.

    Every `key_every`-th chunk is a key chunk.  `nan_in` marks one chunk
    whose non-identifier fields serialize as NaN, mirroring how the
    generator writes degenerate chunks.
    """
    rng = random.Random(seed)
    node_lines: list[str] = []
    dts_lines: list[str] = []
    ptr_lines: list[str] = []
    pn_addresses: list[int] = []
    vn_addresses: list[int] = []

    address = base + 8
    for i in range(n_chunks):
        chn = address
        keyed = (i + 1) % key_every == 0
        letter = KEY_LETTERS[i % len(KEY_LETTERS)]
        children: list[tuple[str, int]] = []
        child_count = rng.randint(1, 3)
        for j in range(child_count):
            child = chn + 8 * (j + 1)
            if keyed and j == 0:
                children.append(("KN", child))
            elif rng.random() < 0.4:
                children.append(("PN", child))
                pn_addresses.append(child)
            else:
                children.append(("VN", child))
                vn_addresses.append(child)

        attrs = [f'label="CHN({i + 1})"']
        attrs.append('color="green"' if keyed else 'color="cyan"')
        attrs.append("style=filled shape=square")
        if keyed:
            attrs.append(f'key="{letter}"')
        if semantic:
            byte_size = 8 * (1 + child_count)
            ptr_count = sum(1 for kind, _ in children if kind == "PN")
            vn_count = sum(1 for kind, _ in children if kind == "VN")
            if nan_in == i:
                body = f"{chn},NaN,NaN,NaN,0,{int(keyed)}"
            else:
                entropy = round(rng.random() * 8, 4)
                body = f"{chn},{byte_size},{ptr_count},{vn_count},{entropy},{int(keyed)}"
            attrs.append(f'comment="[{body}]"')
        node_lines.append(f'    "CHN(0x{chn:x})" [{" ".join(attrs)}];')

        for kind, child in children:
            if kind == "KN":
                node_lines.append(
                    f'    "KN_KEY_{letter}(0x{child:x})" [label="KN({letter})" '
                    'color="green" style=filled];'
                )
                child_id = f"KN_KEY_{letter}(0x{child:x})"
            elif kind == "PN":
                node_lines.append(
                    f'    "PN(0x{child:x})" [label="PN" color="orange" '
                    "style=filled shape=hexagon];"
                )
                child_id = f"PN(0x{child:x})"
            else:
                node_lines.append(
                    f'    "VN(0x{child:x})" [label="VN" color="grey" style=filled];'
                )
                child_id = f"VN(0x{child:x})"
            dts_lines.append(
                f'    "CHN(0x{chn:x})" -> "{child_id}" [label="dts" weight=1]'
            )
        address = chn + 8 * (1 + child_count) + 8

    for pn in pn_addresses:
        if vn_addresses:
            target = rng.choice(vn_addresses)
            ptr_lines.append(
                f'    "PN(0x{pn:x})" -> "VN(0x{target:x})" [label="ptr" weight=1]'
            )
    if undeclared_ptr and pn_addresses:
        ptr_lines.append(
            f'    "PN(0x{pn_addresses[0]:x})" -> "VN(0xdead0)" [label="ptr" weight=1]'
        )

    lines = [f'strict digraph "{name}" {{']
    if semantic:
        quoted = ",".join(f"'{field}'" for field in SEM_FIELDS)
        lines.append(
            f"    comment=\"{{ 'embedding-type': '{SEM_TYPE}', "
            f"'embedding-fields': [{quoted}] }}\";"
        )
    lines.extend(node_lines + dts_lines + ptr_lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dataset(
    directory: Path,
    n_graphs: int = 4,
    semantic: bool = True,
    n_chunks: int = 6,
    **kwargs,
) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_graphs):
        path = directory / f"{100 + i}-1.gv"
        path.write_text(
            synth_dot(
                f"{100 + i}-1", n_chunks=n_chunks, seed=i, semantic=semantic, **kwargs
            )
        )
        paths.append(path)
    return paths


@pytest.fixture
def semantic_dataset(tmp_path) -> Path:
    write_dataset(tmp_path / "semantic", n_graphs=4)
    return tmp_path / "semantic"


@pytest.fixture
def structural_dataset(tmp_path) -> Path:
    write_dataset(tmp_path / "structural", n_graphs=4, semantic=False)
    return tmp_path / "structural"


# One hand-built heap dump recipe for the generator CLI: 18 blocks,
# 5 chunks, one 16-byte key at 0x1030 (blocks 6 and 7).
TINY_BLOCKS = 18
TINY_WORDS = {
    1: 33,
    2: 0x1038,
    3: 0x0102030405060708,
    5: 33,
    9: 41,
    10: 0x1010,
    13: 40,
    14: 16,
    16: 33,
}


def tiny_pair(root: Path, file_id: str, key: bytes) -> None:
    data = bytearray(TINY_BLOCKS * 8)
    for block, value in TINY_WORDS.items():
        data[block * 8 : (block + 1) * 8] = value.to_bytes(8, "little")
    data[6 * 8 : 8 * 8] = key
    (root / f"{file_id}-heap.raw").write_bytes(bytes(data))
    annotation = {
        "HEAP_START": "1000",
        "KEY_A": key.hex(),
        "KEY_A_ADDR": "1030",
        "KEY_A_LEN": "16",
        "KEY_A_REAL_LEN": "16",
        "SSH_STRUCT_ADDR": "1010",
        "SESSION_STATE_ADDR": "1010",
    }
    (root / f"{file_id}.json").write_text(json.dumps(annotation))


@pytest.fixture(scope="session")
def exported_dataset(tmp_path_factory) -> Path:
    """Four graphs produced by the actual generator CLI, or skip without it."""
    if shutil.which("heapgraph") is None:
        pytest.skip("generator CLI not installed")
    root = tmp_path_factory.mktemp("exported")
    input_dir = root / "in"
    input_dir.mkdir()
    for i in range(4):
        tiny_pair(input_dir, f"{5 + i}-1", bytes([0x41 + i]) * 16)
    result = subprocess.run(
        [
            "heapgraph", "pipeline", "graph-with-embedding-comments",
            "-i", str(input_dir), "-o", str(root / "out"),
            "-v", "-a", "chunk-header-node",
            "-c", "chunk-semantic-embedding", "-e", "none", "-s", "none",
        ],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    produced = [d for d in (root / "out").iterdir() if d.is_dir()]
    assert len(produced) == 1
    assert len(list(produced[0].glob("*.gv"))) == 4
    return produced[0]
