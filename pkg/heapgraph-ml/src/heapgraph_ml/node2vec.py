"""Node2Vec: second-order biased random walks + skip-gram on torch.

The reference implementation (biased walks feeding gensim's Word2Vec) is
not available here, so both halves are implemented directly.  Semantics
follow the original algorithm: a walk step from `current`, having arrived
from `previous`, weights each candidate neighbor by

    1/p  if the candidate IS `previous` (return),
    1    if the candidate neighbors `previous` (stay close),
    1/q  otherwise (venture out),

so p = q = 1 degenerates to the plain uniform random walk.  Walks run on
the undirected view of the graph; chunk graphs are weakly connected
through their pointer edges and direction carries no meaning for
neighborhood sampling.

The skip-gram half trains with negative sampling (5 negatives per pair,
unigram^0.75 noise distribution).  `batch_words` is interpreted as the
number of walks contributing pairs to one optimizer step.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

import networkx as nx
import numpy as np
import torch

log = logging.getLogger(__name__)

NEGATIVES_PER_PAIR = 5


@dataclass(frozen=True)
class Node2VecParams:
    dimensions: int = 128
    walk_length: int = 16
    num_walks: int = 50
    p: float = 1.0
    q: float = 1.0
    window: int = 10
    batch_words: int = 8
    workers: int = 16  # recorded for the log; sampling here is single-process
    epochs: int = 5
    seed: int = 0

    def as_row(self) -> dict[str, object]:
        return {
            "node2vec_dimensions": self.dimensions,
            "node2vec_walk_length": self.walk_length,
            "node2vec_num_walks": self.num_walks,
            "node2vec_p": self.p,
            "node2vec_q": self.q,
            "node2vec_window": self.window,
            "node2vec_batch_words": self.batch_words,
            "node2vec_workers": self.workers,
            "node2vec_epochs": self.epochs,
        }


def step_weights(
    graph: nx.Graph, previous: int | None, current: int, p: float, q: float
) -> tuple[list[int], list[float]]:
    """Unnormalized transition weights out of `current`."""
    neighbors = sorted(graph.neighbors(current))
    if previous is None:
        return neighbors, [1.0] * len(neighbors)
    weights = []
    for candidate in neighbors:
        if candidate == previous:
            weights.append(1.0 / p)
        elif graph.has_edge(candidate, previous):
            weights.append(1.0)
        else:
            weights.append(1.0 / q)
    return neighbors, weights


def generate_walks(
    graph: nx.Graph, params: Node2VecParams, rng: random.Random
) -> list[list[int]]:
    walks = []
    nodes = sorted(graph.nodes)
    for _ in range(params.num_walks):
        rng.shuffle(nodes)
        for start in nodes:
            walk = [start]
            previous: int | None = None
            while len(walk) < params.walk_length:
                candidates, weights = step_weights(
                    graph, previous, walk[-1], params.p, params.q
                )
                if not candidates:
                    break
                previous = walk[-1]
                walk.append(rng.choices(candidates, weights=weights, k=1)[0])
            walks.append(walk)
    return walks


def _pairs_from_walk(walk: list[int], window: int, index_of: dict[int, int]) -> list[tuple[int, int]]:
    pairs = []
    for i, center in enumerate(walk):
        lo = max(0, i - window)
        hi = min(len(walk), i + window + 1)
        for j in range(lo, hi):
            if j != i:
                pairs.append((index_of[center], index_of[walk[j]]))
    return pairs


class _SkipGram(torch.nn.Module):
    def __init__(self, vocab: int, dimensions: int):
        super().__init__()
        self.target = torch.nn.Embedding(vocab, dimensions)
        self.context = torch.nn.Embedding(vocab, dimensions)
        bound = 0.5 / dimensions
        torch.nn.init.uniform_(self.target.weight, -bound, bound)
        torch.nn.init.zeros_(self.context.weight)

    def forward(
        self, centers: torch.Tensor, contexts: torch.Tensor, negatives: torch.Tensor
    ) -> torch.Tensor:
        center_vecs = self.target(centers)
        pos_score = torch.sum(center_vecs * self.context(contexts), dim=1)
        loss = -torch.nn.functional.logsigmoid(pos_score).mean()
        neg_score = torch.bmm(
            self.context(negatives), center_vecs.unsqueeze(2)
        ).squeeze(2)
        loss = loss - torch.nn.functional.logsigmoid(-neg_score).mean()
        return loss


def train_node2vec(
    graph: nx.DiGraph | nx.Graph,
    params: Node2VecParams,
    quiet: bool = False,
) -> dict[int, np.ndarray]:
    """Per-node dense vectors, keyed by node (address)."""
    undirected = graph.to_undirected(as_view=False) if graph.is_directed() else graph
    nodes = sorted(undirected.nodes)
    if not nodes:
        return {}
    index_of = {node: i for i, node in enumerate(nodes)}

    rng = random.Random(params.seed)
    torch.manual_seed(params.seed)
    walks = generate_walks(undirected, params, rng)

    # unigram^0.75 noise distribution over walk occurrences
    counts = np.zeros(len(nodes))
    for walk in walks:
        for node in walk:
            counts[index_of[node]] += 1
    noise = counts**0.75
    noise_probs = torch.from_numpy(noise / noise.sum())

    model = _SkipGram(len(nodes), params.dimensions)
    optimizer = torch.optim.Adam(model.parameters(), lr=0.025)
    generator = torch.Generator().manual_seed(params.seed)

    for epoch in range(params.epochs):
        rng.shuffle(walks)
        total = 0.0
        steps = 0
        for batch_start in range(0, len(walks), params.batch_words):
            batch_walks = walks[batch_start : batch_start + params.batch_words]
            pairs = []
            for walk in batch_walks:
                pairs.extend(_pairs_from_walk(walk, params.window, index_of))
            if not pairs:
                continue
            pair_tensor = torch.tensor(pairs, dtype=torch.long)
            negatives = torch.multinomial(
                noise_probs.expand(len(pairs), -1),
                NEGATIVES_PER_PAIR,
                replacement=True,
                generator=generator,
            )
            optimizer.zero_grad()
            loss = model(pair_tensor[:, 0], pair_tensor[:, 1], negatives)
            loss.backward()
            optimizer.step()
            total += loss.item()
            steps += 1
        if not quiet:
            log.info("node2vec epoch %d/%d loss %.4f", epoch + 1, params.epochs, total / max(steps, 1))

    weights = model.target.weight.detach().numpy()
    return {node: weights[index_of[node]].copy() for node in nodes}
