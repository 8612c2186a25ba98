"""Feature correlation matrices and their heatmap renderings.

Runs on the generator's own feature columns, never on Node2Vec
dimensions (those have no interpretable identity to correlate).
Zero-variance columns have no defined correlation; they are reported
as 0 against everything else, 1 against themselves, and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

CORRELATION_METHODS = ("pearson", "spearman", "kendall")


@dataclass
class CorrelationResult:
    method: str
    matrix: pd.DataFrame
    constant_columns: list[str]


def feature_correlation(
    features: np.ndarray, names: list[str], method: str
) -> CorrelationResult:
    if method not in CORRELATION_METHODS:
        raise ValueError(f"unknown correlation method {method!r}")
    frame = pd.DataFrame(features, columns=names)
    constant = [name for name in names if frame[name].nunique() <= 1]
    matrix = frame.corr(method=method)
    matrix = matrix.fillna(0.0)
    np.fill_diagonal(matrix.values, 1.0)
    return CorrelationResult(method=method, matrix=matrix, constant_columns=constant)


def render_heatmap(result: CorrelationResult, path: Path | str, title: str = "") -> Path:
    path = Path(path)
    matrix = result.matrix
    side = max(6.0, 0.22 * len(matrix.columns))
    fig, ax = plt.subplots(figsize=(side, side))
    image = ax.imshow(matrix.values, cmap="coolwarm", vmin=-1.0, vmax=1.0)
    ax.set_xticks(range(len(matrix.columns)))
    ax.set_xticklabels(matrix.columns, rotation=90, fontsize=6)
    ax.set_yticks(range(len(matrix.index)))
    ax.set_yticklabels(matrix.index, fontsize=6)
    ax.set_title(title or f"{result.method} correlation")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
