"""Min-max feature scaling fitted on training data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, RaggedRows


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    x_min: np.ndarray
    x_max: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.x_min)


def _as_matrix(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        m = rows.astype(np.float64, copy=False)
    else:
        rows = list(rows)
        if rows and len({len(r) for r in rows}) > 1:
            raise RaggedRows("rows have differing lengths")
        m = np.asarray(rows, dtype=np.float64)
    if m.size == 0:
        raise EmptyMatrix("training matrix is empty")
    if m.ndim != 2:
        raise RaggedRows(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def fit(train_matrix) -> NormalizationParams:
    m = _as_matrix(train_matrix)
    return NormalizationParams(m.min(axis=0), m.max(axis=0))


def apply(params: NormalizationParams, x) -> np.ndarray:
    """Scale to the training range. Not clamped: unseen values may leave
    [0, 1]. Constant training columns map to 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.dimension:
        raise DimensionMismatch(f"expected {params.dimension} features, got {x.shape[-1]}")
    span = params.x_max - params.x_min
    flat = span == 0
    out = (x - params.x_min) / np.where(flat, 1.0, span)
    return np.where(flat, 0.0, out)
