"""Vein density ratios from gray-scale morphological opening."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMask
from .segmentation import LeafRegion


@dataclass(frozen=True)
class VeinFeatures:
    v1: float
    v2: float
    v3: float
    radii: tuple[int, int, int]

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3])


def disk(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    return r[:, None] ** 2 + r[None, :] ** 2 <= radius * radius


def _extremes(dtype) -> tuple:
    if np.issubdtype(dtype, np.integer):
        info = np.iinfo(dtype)
        return info.min, info.max
    return -np.inf, np.inf


def grayscale_opening(g: np.ndarray, radius: int) -> np.ndarray:
    """Flat disk opening; neighbourhoods are clipped to the image."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    g = np.asarray(g)
    fp = disk(radius)
    lo, hi = _extremes(g.dtype)
    # padding with the dtype extreme is the same as ignoring out-of-image pixels
    eroded = ndimage.grey_erosion(g, footprint=fp, mode="constant", cval=hi)
    return ndimage.grey_dilation(eroded, footprint=fp, mode="constant", cval=lo)


def vein_masks(region: LeafRegion, radii=(1, 2, 3), diff_threshold: float = 10, margin: int = 1) -> list[np.ndarray]:
    mask = np.asarray(region.mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("mask has no foreground")
    inner = mask
    if margin > 0:
        inner = ndimage.binary_erosion(mask, structure=np.ones((3, 3), bool), iterations=margin, border_value=0)
    gray = np.asarray(region.gray).astype(np.int32)
    out = []
    for r in radii:
        opened = grayscale_opening(gray, r)
        out.append((np.abs(gray - opened) > diff_threshold) & inner)
    return out


def vein_ratios(region: LeafRegion, radii=(1, 2, 3), diff_threshold: float = 10, margin: int = 1) -> VeinFeatures:
    """Fraction of leaf pixels that an opening at each radius strips by more
    than ``diff_threshold`` gray levels, ignoring a ``margin``-pixel rim."""
    radii = tuple(int(r) for r in radii)
    if len(radii) != 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"need three strictly increasing radii, got {radii}")
    area = int(np.count_nonzero(region.mask))
    ratios = [int(np.count_nonzero(m)) / area for m in vein_masks(region, radii, diff_threshold, margin)]
    return VeinFeatures(*ratios, radii=radii)
