"""Graph convolutional models for node-level key-chunk prediction.

The convolution is the standard symmetric-normalized propagation

    X' = D^-1/2 (A + I) D^-1/2 X W + b

computed densely per graph; our chunk graphs are small (hundreds of
nodes), so sparse kernels would buy nothing.  Five architectures of
increasing depth are provided; all end in a 2-class output over nodes
and can take any input feature width, so the same models run on
comment features, Node2Vec vectors, or their concatenation.

Fully connected widths the architecture descriptions leave open are
collected in MODEL_CONFIGS rather than buried in the layer stacks.
"""

from __future__ import annotations

import networkx as nx
import numpy as np
import torch
from torch import nn

GCN_MODEL_NAMES = (
    "very-simple-gcn",
    "simple-gcn",
    "first-gcn",
    "gcn-with-dropout",
    "advanced-gcn",
)

MODEL_CONFIGS: dict[str, dict[str, object]] = {
    "very-simple-gcn": {"conv": [16], "fc": []},
    "simple-gcn": {"conv": [12, 24], "fc": [16]},
    "first-gcn": {"conv": [16, 32], "fc": [64, 32]},
    "gcn-with-dropout": {"conv": [16, 32], "fc": [64, 32], "dropout": 0.5, "batchnorm": True},
    "advanced-gcn": {"conv": [32, 64, 128], "fc": [256, 128, 64], "dropout": 0.5, "batchnorm": True},
}

NUM_CLASSES = 2


def normalized_adjacency(graph: nx.DiGraph | nx.Graph, order: list[int]) -> torch.Tensor:
    """Dense D^-1/2 (A + I) D^-1/2 over the undirected view."""
    n = len(order)
    index_of = {node: i for i, node in enumerate(order)}
    a = np.eye(n)
    for src, dst in graph.edges:
        a[index_of[src], index_of[dst]] = 1.0
        a[index_of[dst], index_of[src]] = 1.0
    degree = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degree)
    return torch.from_numpy(inv_sqrt[:, None] * a * inv_sqrt[None, :]).float()


class GraphConv(nn.Module):
    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.linear = nn.Linear(in_features, out_features)

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        return self.linear(adj @ x)


class NodeClassifierGCN(nn.Module):
    """Conv stack then FC stack, built from a MODEL_CONFIGS entry."""

    def __init__(self, name: str, in_features: int):
        super().__init__()
        config = MODEL_CONFIGS[name]
        self.name = name
        conv_widths: list[int] = list(config["conv"])  # type: ignore[arg-type]
        fc_widths: list[int] = list(config["fc"])  # type: ignore[arg-type]
        dropout = float(config.get("dropout", 0.0))  # type: ignore[arg-type]
        batchnorm = bool(config.get("batchnorm", False))

        self.convs = nn.ModuleList()
        self.norms = nn.ModuleList()
        width = in_features
        for out_width in conv_widths:
            self.convs.append(GraphConv(width, out_width))
            self.norms.append(nn.BatchNorm1d(out_width) if batchnorm else nn.Identity())
            width = out_width

        self.fcs = nn.ModuleList()
        for out_width in fc_widths:
            self.fcs.append(nn.Linear(width, out_width))
            width = out_width
        self.output = nn.Linear(width, NUM_CLASSES)
        self.dropout = nn.Dropout(dropout) if dropout > 0 else nn.Identity()

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        for conv, norm in zip(self.convs, self.norms):
            x = conv(x, adj)
            x = norm(x)
            x = torch.relu(x)
            x = self.dropout(x)
        for fc in self.fcs:
            x = torch.relu(fc(x))
            x = self.dropout(x)
        return self.output(x)


def build_model(name: str, in_features: int, seed: int = 0) -> NodeClassifierGCN:
    if name not in MODEL_CONFIGS:
        raise ValueError(f"unknown GCN model {name!r}")
    torch.manual_seed(seed)
    return NodeClassifierGCN(name, in_features)


def train_gcn(
    model: NodeClassifierGCN,
    graphs: list[tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]],
    epochs: int,
    lr: float = 0.01,
) -> None:
    """Full-batch training over (features, adjacency, labels, mask) tuples.

    The mask selects the rows with ground truth (the chunk nodes); the
    other nodes only shape the convolution, never the loss.
    """
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    model.train()
    for _ in range(epochs):
        for x, adj, y, mask in graphs:
            optimizer.zero_grad()
            out = model(x, adj)
            loss = loss_fn(out[mask], y)
            loss.backward()
            optimizer.step()


@torch.no_grad()
def predict_gcn(
    model: NodeClassifierGCN,
    graphs: list[tuple[torch.Tensor, torch.Tensor, torch.Tensor]],
) -> tuple[np.ndarray, np.ndarray]:
    """(hard labels, positive-class probabilities) over the masked rows."""
    model.eval()
    predictions = []
    scores = []
    for x, adj, mask in graphs:
        logits = model(x, adj)[mask]
        probs = torch.softmax(logits, dim=1)
        predictions.append(logits.argmax(dim=1).numpy())
        scores.append(probs[:, 1].numpy())
    return np.concatenate(predictions), np.concatenate(scores)
