"""Probabilistic neural network (Parzen-window) classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MissingClass, NonPositiveSigma, UnknownClass


@dataclass(frozen=True, eq=False)
class PnnModel:
    exemplars: tuple[np.ndarray, ...]  # per class, (n_j, d)
    sigma: float
    class_names: tuple[str, ...] = field(default=())

    @property
    def n_classes(self) -> int:
        return len(self.exemplars)

    @property
    def dimension(self) -> int:
        return self.exemplars[0].shape[1]


@dataclass(frozen=True, eq=False)
class ClassScores:
    scores: np.ndarray
    predicted: int

    def top(self, k: int = 5) -> list[tuple[int, float]]:
        order = sorted(range(len(self.scores)), key=lambda j: (-self.scores[j], j))
        return [(j, float(self.scores[j])) for j in order[:k]]


def train(features, labels, sigma: float = 0.05, class_names=None) -> PnnModel:
    """Store exemplars per class; there is nothing to optimise."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch(f"features {X.shape} do not match {len(y)} labels")
    if len(y) == 0:
        raise MissingClass("no training rows")
    if (y < 0).any():
        raise MissingClass("negative class id")
    n_classes = int(y.max()) + 1
    if class_names is not None:
        n_classes = max(n_classes, len(class_names))
    groups = []
    for j in range(n_classes):
        rows = X[y == j]
        if len(rows) == 0:
            raise MissingClass(f"class {j} has no training rows")
        groups.append(np.ascontiguousarray(rows))
    names = tuple(class_names) if class_names is not None else tuple(str(j) for j in range(n_classes))
    return PnnModel(tuple(groups), float(sigma), names)


def _check(model: PnnModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dimension,):
        raise DimensionMismatch(f"expected {model.dimension} features, got shape {x.shape}")
    return x


def _score(model: PnnModel, x: np.ndarray, j: int) -> float:
    diff = model.exemplars[j] - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    return float(np.exp(-d2 / (2 * model.sigma**2)).mean())


def class_score(model: PnnModel, x, j: int) -> float:
    """Mean Gaussian kernel between ``x`` and the exemplars of class ``j``."""
    if not 0 <= j < model.n_classes:
        raise UnknownClass(j)
    return _score(model, _check(model, x), j)


def density_constant(model: PnnModel) -> float:
    d = model.dimension
    return 1.0 / ((2 * math.pi) ** (d / 2) * model.sigma**d)


def full_parzen_density(model: PnnModel, x, j: int) -> float:
    """Normalised Parzen density; differs from :func:`class_score` only by a
    class-independent factor, so it is never needed for classification."""
    return class_score(model, x, j) * density_constant(model)


def scores(model: PnnModel, x) -> np.ndarray:
    x = _check(model, x)
    return np.array([_score(model, x, j) for j in range(model.n_classes)])


def classify(model: PnnModel, x) -> tuple[int, ClassScores]:
    s = scores(model, x)
    # np.argmax returns the first maximum: ties go to the lowest class id
    best = int(np.argmax(s))
    return best, ClassScores(s, best)


def classify_batch(model: PnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([classify(model, x)[0] for x in X], dtype=np.int64)
