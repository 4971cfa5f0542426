"""Global lacunarity measures of leaf pixel values."""

from __future__ import annotations

import numpy as np

from ._counts import value_counts
from .errors import ZeroMean
from .segmentation import LeafRegion, to_grayscale

TEXTURE_CHANNELS = ("R", "G", "B", "gray")
DEFAULT_POWERS = (2, 4, 6)


def _relative(values) -> tuple[np.ndarray, np.ndarray]:
    vals, counts = value_counts(values)
    if counts.sum() == 0:
        raise ZeroMean("no values")
    mean = (vals * counts).sum() / counts.sum()
    if mean <= 0:
        raise ZeroMean(f"mean is {mean}")
    return vals / mean, counts / counts.sum()


def lacunarity_ls(values) -> float:
    """Mean of squares over squared mean, minus one."""
    rel, w = _relative(values)
    return float((w * rel**2).sum() - 1.0)


def lacunarity_la(values) -> float:
    """Mean absolute relative deviation from the mean."""
    rel, w = _relative(values)
    return float((w * np.abs(rel - 1.0)).sum())


def lacunarity_lp(values, p: int) -> float:
    """p-th power mean of the relative deviation |P/mean - 1|.

    The deviation is taken in absolute value so odd p stays real and p=1
    reproduces :func:`lacunarity_la`.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    rel, w = _relative(values)
    return float((w * np.abs(rel - 1.0) ** p).sum() ** (1.0 / p))


def texture_vector(region: LeafRegion, powers=DEFAULT_POWERS) -> np.ndarray:
    """Lacunarity for R, G, B, gray (channel-major) at each power in ``powers``."""
    mask = np.asarray(region.mask, dtype=bool)
    rgb = np.asarray(region.rgb)
    gray = region.gray if region.gray is not None else to_grayscale(rgb)
    planes = (rgb[..., 0], rgb[..., 1], rgb[..., 2], gray)
    out = []
    for name, plane in zip(TEXTURE_CHANNELS, planes):
        vals = plane[mask]
        try:
            out.extend(lacunarity_lp(vals, p) for p in powers)
        except ZeroMean as exc:
            raise ZeroMean(f"channel {name}: {exc}") from exc
    return np.array(out)
