"""Reference outcomes from full-scale runs of the original experiments.

The classifier scores below were obtained on the complete cleaned corpus
(tens of thousands of graphs) with unpinned seeds, so they are not
reproducible bit for bit at test scale.  They are recorded as orientation
targets: a correct reimplementation fed the full dataset should land in
this neighborhood.  Nothing in the test suite gates on them.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ReferenceResult:
    """Best observed instance of a model family, full-corpus run."""

    model: str
    node_embedding: str
    precision: float | None
    recall: float | None
    f1: float | None
    auc: float | None


REFERENCE_RESULTS: tuple[ReferenceResult, ...] = (
    ReferenceResult(
        model="sgd-classifier",
        node_embedding="node2vec",
        precision=0.4615,
        recall=1.0,
        f1=0.6316,
        auc=0.9962,
    ),
    ReferenceResult(
        model="first-gcn",
        node_embedding="node2vec",
        precision=None,
        recall=1.0,
        f1=None,
        auc=0.9913,
    ),
)

# These are orientation targets, not gates; see the module docstring.
STRICT_GATE = False
