"""Leaf/background separation.

Rasters are numpy arrays: RGB ``(H, W, 3)`` uint8, gray ``(H, W)`` uint8 and
masks ``(H, W)`` bool. Points are ``(x, y)`` = ``(column, row)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyMask, UnimodalHistogram

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# clockwise with y pointing down: E, SE, S, SW, W, NW, N, NE
_DIRS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class LeafRegion:
    rgb: np.ndarray
    gray: np.ndarray
    mask: np.ndarray
    contour: np.ndarray  # (K, 2) int, (x, y), clockwise
    centroid: tuple[float, float]
    area: int
    perimeter: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8, copy=False)
    wr, wg, wb = LUMA_WEIGHTS
    f = img.astype(np.float64)
    lum = wr * f[..., 0] + wg * f[..., 1] + wb * f[..., 2]
    return np.clip(np.floor(lum + 0.5), 0, 255).astype(np.uint8)


def _find_peaks(counts: np.ndarray) -> list[int]:
    """Strict local maxima of a histogram; a flat run counts as one peak,
    represented by its lowest bin."""
    peaks = []
    n = len(counts)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and counts[j + 1] == counts[i]:
            j += 1
        c = counts[i]
        left = counts[i - 1] if i > 0 else -1
        right = counts[j + 1] if j + 1 < n else -1
        if c > 0 and c > left and c > right:
            peaks.append(i)
        i = j + 1
    return peaks


def histogram_threshold(g: np.ndarray, bins: int = 20) -> float:
    """Valley threshold between the two dominant histogram peaks.

    Intensities 0..255 fall into ``bins`` equal-width bins. The valley is the
    least populated bin strictly between the two highest peaks (ties go to the
    bin centred nearest the midpoint of the peak centres, then to the brighter
    bin). Returns the median intensity inside the valley bin, or its centre
    when the bin is empty.
    """
    g = np.asarray(g)
    if g.size == 0:
        raise EmptyMask("empty image")
    if bins < 3:
        raise ValueError("need at least 3 bins")
    levels = np.bincount(g.ravel().astype(np.int64), minlength=256)[:256]
    bin_of = np.arange(256) * bins // 256
    counts = np.bincount(bin_of, weights=levels, minlength=bins).astype(np.int64)

    peaks = _find_peaks(counts)
    if len(peaks) < 2:
        raise UnimodalHistogram(f"histogram has {len(peaks)} peak(s)")
    # highest two, ties toward the lower-intensity bin
    top = sorted(peaks, key=lambda b: (-counts[b], b))[:2]
    lo, hi = sorted(top)

    width = 256 / bins
    centre = lambda b: (b + 0.5) * width  # noqa: E731
    mid = (centre(lo) + centre(hi)) / 2
    between = range(lo + 1, hi)
    valley = min(between, key=lambda b: (counts[b], abs(centre(b) - mid), -b))

    in_bin = np.flatnonzero(bin_of == valley)
    n = int(levels[in_bin].sum())
    if n == 0:
        return float(centre(valley))
    # median from the level histogram: average of the two middle order statistics
    cum = np.cumsum(levels[in_bin])
    a = in_bin[np.searchsorted(cum, (n - 1) // 2 + 1)]
    b = in_bin[np.searchsorted(cum, n // 2 + 1)]
    return (float(a) + float(b)) / 2


def binarize(g: np.ndarray, t: float, invert: bool = False) -> np.ndarray:
    """Leaf = pixels darker than ``t`` (brighter with ``invert``)."""
    if not 0 <= t <= 255:
        raise ValueError(f"threshold {t} outside 0..255")
    g = np.asarray(g)
    return g > t if invert else g < t


def fill_holes(m: np.ndarray) -> np.ndarray:
    # background is flooded 4-connected from the border, the dual of 8-connected foreground
    return ndimage.binary_fill_holes(m)


def largest_component(m: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(m, structure=_EIGHT)
    if n == 0:
        raise EmptyMask("mask has no foreground")
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def clean_mask(m: np.ndarray) -> np.ndarray:
    """Fill enclosed holes, then keep the largest 8-connected component."""
    m = np.asarray(m, dtype=bool)
    if not m.any():
        raise EmptyMask("mask has no foreground")
    return largest_component(fill_holes(m))


def trace_contour(m: np.ndarray) -> np.ndarray:
    """Moore-neighbour trace of the component containing the topmost-leftmost
    foreground pixel, clockwise, as an ``(K, 2)`` array of ``(x, y)``."""
    m = np.asarray(m, dtype=bool)
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        raise EmptyMask("mask has no foreground")
    # raster order: first nonzero is topmost row, leftmost column
    sx, sy = int(xs[0]), int(ys[0])
    pad = np.pad(m, 1)

    def fg(x: int, y: int) -> bool:
        return bool(pad[y + 1, x + 1])

    def step(cx: int, cy: int, back: int) -> tuple[int, int, int] | None:
        for k in range(1, 9):
            d = (back + k) % 8
            dx, dy = _DIRS[d]
            if fg(cx + dx, cy + dy):
                px, py = _DIRS[(d - 1) % 8]
                nx, ny = cx + dx, cy + dy
                return nx, ny, _DIR_INDEX[(cx + px - nx, cy + py - ny)]
        return None

    first = step(sx, sy, _DIR_INDEX[(-1, 0)])
    if first is None:
        return np.array([[sx, sy]], dtype=np.int64)
    points = [(sx, sy)]
    cx, cy, back = first
    while True:
        nxt = step(cx, cy, back)
        if (cx, cy) == (sx, sy) and nxt[:2] == first[:2]:
            break
        points.append((cx, cy))
        cx, cy, back = nxt
    return np.array(points, dtype=np.int64)


def chain_length(contour: np.ndarray) -> float:
    """Closed chain length: 1 per axial step, sqrt(2) per diagonal step."""
    if len(contour) < 2:
        return 0.0
    steps = np.abs(np.diff(np.vstack([contour, contour[:1]]), axis=0))
    diagonal = int(np.count_nonzero((steps[:, 0] == 1) & (steps[:, 1] == 1)))
    return (len(steps) - diagonal) + diagonal * math.sqrt(2)


def extract_region(img: np.ndarray, m: np.ndarray, gray: np.ndarray | None = None) -> LeafRegion:
    img = np.asarray(img)
    m = np.asarray(m, dtype=bool)
    if img.shape[:2] != m.shape:
        raise DimensionMismatch(f"image {img.shape[:2]} vs mask {m.shape}")
    if not m.any():
        raise EmptyMask("mask has no foreground")
    if gray is None:
        gray = to_grayscale(img)
    ys, xs = np.nonzero(m)
    area = int(xs.size)
    contour = trace_contour(m)
    return LeafRegion(
        rgb=img,
        gray=gray,
        mask=m,
        contour=contour,
        centroid=(float(xs.sum()) / area, float(ys.sum()) / area),
        area=area,
        perimeter=chain_length(contour),
    )


def segment(img: np.ndarray, bins: int = 20, invert: bool = False) -> LeafRegion:
    """Gray conversion, histogram threshold, cleanup and region extraction."""
    gray = to_grayscale(img)
    t = histogram_threshold(gray, bins)
    mask = clean_mask(binarize(gray, t, invert=invert))
    return extract_region(img, mask, gray)


def crop_to_mask(region: LeafRegion, margin: int) -> LeafRegion:
    """Restrict a region to its mask bounding box plus ``margin`` pixels.

    Features only look at mask pixels and at neighbourhoods reaching at most
    ``margin`` pixels beyond them, so cropping leaves them unchanged.
    """
    ys, xs = np.nonzero(region.mask)
    h, w = region.mask.shape
    y0, y1 = max(int(ys.min()) - margin, 0), min(int(ys.max()) + margin + 1, h)
    x0, x1 = max(int(xs.min()) - margin, 0), min(int(xs.max()) + margin + 1, w)
    cx, cy = region.centroid
    return LeafRegion(
        rgb=region.rgb[y0:y1, x0:x1],
        gray=region.gray[y0:y1, x0:x1],
        mask=region.mask[y0:y1, x0:x1],
        contour=region.contour - np.array([x0, y0]),
        centroid=(cx - x0, cy - y0),
        area=region.area,
        perimeter=region.perimeter,
    )
