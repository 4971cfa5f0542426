"""Geometric shape features and polar Fourier descriptors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    DegenerateContour,
    EmptyMask,
    FrequencyOutOfRange,
    ZeroDC,
    ZeroMinRadius,
    ZeroPerimeter,
)
from .segmentation import LeafRegion


@dataclass(frozen=True, eq=False)
class PolarGrid:
    samples: np.ndarray  # (R_s, T_s) float64 of 0/1
    max_radius: float

    @property
    def radial_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def angular_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class FourierDescriptors:
    values: np.ndarray
    m: int
    n: int


def _diameter_pair(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Farthest pair of points; hull vertices are enough when a hull exists."""
    cand = pts
    if len(pts) > 3:
        try:
            cand = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear input
            cand = pts
    d2 = ((cand[:, None, :] - cand[None, :, :]) ** 2).sum(-1)
    i, j = np.unravel_index(int(np.argmax(d2)), d2.shape)
    return cand[i], cand[j]


def slimness(region: LeafRegion) -> float:
    """Leaf width over leaf length.

    Length is the contour diameter; width is the contour's extent
    perpendicular to that diameter.
    """
    pts = np.unique(np.asarray(region.contour, dtype=np.float64), axis=0)
    if len(pts) < 2:
        raise DegenerateContour("slimness needs at least two contour points")
    pts -= pts.min(axis=0)  # exact for integer points; result ignores translation
    a, b = _diameter_pair(pts)
    axis = b - a
    length = math.hypot(*axis)
    normal = np.array([-axis[1], axis[0]]) / length
    proj = pts @ normal
    width = float(proj.max() - proj.min())
    if width <= 1e-12:
        raise DegenerateContour("contour has zero width")
    return width / length


def roundness(region: LeafRegion) -> float:
    if region.perimeter <= 0:
        raise ZeroPerimeter("roundness needs a positive perimeter")
    return 4 * math.pi * region.area / region.perimeter**2


def dispersion(region: LeafRegion) -> float:
    """Max over min centroid-to-contour distance."""
    c = np.asarray(region.contour, dtype=np.float64)
    if len(c) == 0:
        raise DegenerateContour("empty contour")
    cx, cy = region.centroid
    r = np.hypot(c[:, 0] - cx, c[:, 1] - cy)
    rmin = float(r.min())
    if rmin <= 0:
        raise ZeroMinRadius("centroid lies on the contour")
    return float(r.max()) / rmin


def _unit_circle(T_s: int) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin of j*2pi/T_s; for T_s divisible by 4 the quadrants are built
    from one table so quarter-turn rotations permute samples exactly."""
    if T_s % 4:
        t = np.arange(T_s) * (2 * math.pi / T_s)
        return np.cos(t), np.sin(t)
    q = T_s // 4
    c = np.cos(np.arange(q + 1) * (2 * math.pi / T_s))
    c[0], c[q] = 1.0, 0.0
    cos0, sin0 = c[:q], c[q:0:-1]
    cos = np.concatenate([cos0, -sin0, -cos0, sin0])
    sin = np.concatenate([sin0, cos0, -sin0, -cos0])
    return cos, sin


def polar_resample(region: LeafRegion, R_s: int = 64, T_s: int = 128) -> PolarGrid:
    """Nearest-pixel resampling of the mask on a centroid-centred polar grid.

    Radii run from 0 to the largest centroid-to-foreground distance in
    ``R_s`` equal steps; angles are ``j * 2pi / T_s``. Samples falling
    outside the raster are 0.
    """
    if R_s < 2 or T_s < 1:
        raise ValueError("need R_s >= 2 and T_s >= 1")
    mask = np.asarray(region.mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    n = xs.size
    if n == 0:
        raise EmptyMask("mask has no foreground")
    # centroid split into integer part and fraction with exact integer
    # arithmetic, so integer shifts of the mask give bit-identical samples
    sx, sy = int(xs.sum()), int(ys.sum())
    xi, yi = sx // n, sy // n
    xf, yf = (sx % n) / n, (sy % n) / n

    # pixels are unit squares: R reaches the farthest pixel corner, which
    # makes the grid exactly covariant under pixel-replication scaling
    dx = np.abs((xs - xi) - xf) + 0.5
    dy = np.abs((ys - yi) - yf) + 0.5
    R = math.sqrt(float((dx * dx + dy * dy).max()))

    r = np.arange(R_s) * (R / (R_s - 1))
    cos, sin = _unit_circle(T_s)
    px = xi + np.floor(xf + np.outer(r, cos) + 0.5).astype(np.int64)
    py = yi + np.floor(yf + np.outer(r, sin) + 0.5).astype(np.int64)
    h, w = mask.shape
    inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    samples = np.zeros((R_s, T_s), dtype=np.float64)
    samples[inside] = mask[py[inside], px[inside]]
    return PolarGrid(samples, R)


def pft(grid: PolarGrid, m: int, n: int) -> np.ndarray:
    """Polar Fourier coefficients PF[rho, phi] for 0<=rho<=m, 0<=phi<=n.

    Direct evaluation of only the needed frequencies as two small matrix
    products; far cheaper than a full 2-D FFT for m, n this small.
    """
    f = np.asarray(grid.samples, dtype=np.float64)
    R_s, T_s = f.shape
    if not (0 <= m < R_s and 0 <= n < T_s):
        raise FrequencyOutOfRange(f"need m < {R_s} and n < {T_s}, got m={m}, n={n}")
    er = np.exp(-2j * np.pi * np.outer(np.arange(m + 1), np.arange(R_s)) / R_s)
    et = np.exp(-2j * np.pi * np.outer(np.arange(T_s), np.arange(n + 1)) / T_s)
    return er @ f @ et


def fourier_descriptors(coeffs: np.ndarray, area_disk: float) -> FourierDescriptors:
    """Phase-free, scale-normalised descriptors in row-major (rho, phi) order.

    The DC magnitude is divided by ``area_disk``; every other magnitude by the
    DC magnitude.
    """
    mag = np.abs(np.asarray(coeffs))
    dc = float(mag[0, 0])
    if dc <= 0:
        raise ZeroDC("PF(0,0) is zero: empty shape")
    if area_disk <= 0:
        raise ValueError("area_disk must be positive")
    values = mag.ravel() / dc
    values[0] = dc / area_disk
    return FourierDescriptors(values, mag.shape[0] - 1, mag.shape[1] - 1)


def pft_descriptors(region: LeafRegion, m: int = 4, n: int = 6, R_s: int = 64, T_s: int = 128) -> np.ndarray:
    grid = polar_resample(region, R_s, T_s)
    if grid.max_radius <= 0:
        raise DegenerateContour("single-pixel shape has no polar extent")
    # circle measured in radial samples, so the DC term does not depend on leaf size
    return fourier_descriptors(pft(grid, m, n), math.pi * R_s**2).values


def geometric_features(region: LeafRegion) -> np.ndarray:
    return np.array([slimness(region), roundness(region), dispersion(region)])
