"""Per-channel color moments over leaf pixels."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._counts import value_counts
from .errors import TooFewPixels
from .segmentation import LeafRegion

CHANNELS = ("R", "G", "B")


class ZeroVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ColorMoments:
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray | None = None


def channel_moments(values) -> tuple[float, float, float, float]:
    """(mean, std, skewness, kurtosis) with population (1/N) normalisation.

    Kurtosis is the plain fourth standardised moment (3 for a Gaussian).
    A constant channel yields skewness = kurtosis = 0.
    """
    vals, counts = value_counts(values)
    n = counts.sum()
    mu = float((vals * counts).sum() / n)
    dev = vals - mu
    m2 = float((counts * dev**2).sum() / n)
    sigma = float(np.sqrt(m2))
    if sigma == 0:
        warnings.warn("zero variance channel: skewness and kurtosis set to 0", ZeroVarianceWarning, stacklevel=2)
        return mu, 0.0, 0.0, 0.0
    m3 = float((counts * dev**3).sum() / n)
    m4 = float((counts * dev**4).sum() / n)
    return mu, sigma, m3 / sigma**3, m4 / sigma**4


def color_moments(region: LeafRegion, include_kurtosis: bool = True) -> ColorMoments:
    pixels = np.asarray(region.rgb)[np.asarray(region.mask, dtype=bool)]
    if len(pixels) < 2:
        raise TooFewPixels(f"need at least 2 leaf pixels, got {len(pixels)}")
    rows = np.array([channel_moments(pixels[:, c]) for c in range(3)])
    return ColorMoments(
        mean=rows[:, 0],
        std=rows[:, 1],
        skewness=rows[:, 2],
        kurtosis=rows[:, 3] if include_kurtosis else None,
    )
