"""Synthetic masks and leaf images shared by the tests."""

import math

import numpy as np
from PIL import Image, ImageDraw

from leafpnn.segmentation import extract_region


def disk(radius, size=None, center=None):
    size = size or 2 * radius + 11
    c = center if center is not None else (size // 2, size // 2)
    yy, xx = np.mgrid[:size, :size]
    return (xx - c[0]) ** 2 + (yy - c[1]) ** 2 <= radius * radius


def rect(w, h, pad=5):
    m = np.zeros((h + 2 * pad, w + 2 * pad), bool)
    m[pad:pad + h, pad:pad + w] = True
    return m


def ellipse(a, b, angle_deg=0.0, size=None):
    size = size or int(2 * max(a, b) + 12)
    c = (size - 1) / 2
    yy, xx = np.mgrid[:size, :size]
    t = math.radians(angle_deg)
    u = (xx - c) * math.cos(t) + (yy - c) * math.sin(t)
    v = -(xx - c) * math.sin(t) + (yy - c) * math.cos(t)
    return (u / a) ** 2 + (v / b) ** 2 <= 1


def polygon(points, size):
    im = Image.new("1", (size, size), 0)
    ImageDraw.Draw(im).polygon([tuple(p) for p in points], fill=1)
    return np.array(im, dtype=bool)


def star(n_points, r_out, r_in, angle_deg=0.0, size=None):
    size = size or int(2 * r_out + 12)
    c = size / 2
    pts = []
    for k in range(2 * n_points):
        r = r_out if k % 2 == 0 else r_in
        t = math.pi * k / n_points + math.radians(angle_deg)
        pts.append((c + r * math.cos(t), c + r * math.sin(t)))
    return polygon(pts, size)


def random_blob(rng, base=40, size=120, harmonics=4):
    """Smooth star-convex blob with random radial harmonics."""
    amps = rng.uniform(0.05, 0.25, harmonics) / np.arange(1, harmonics + 1)
    phases = rng.uniform(0, 2 * np.pi, harmonics)
    t = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    r = base * (1 + sum(a * np.cos((k + 2) * t + p) for k, (a, p) in enumerate(zip(amps, phases))))
    c = size / 2 + rng.uniform(-2, 2, 2)
    pts = np.stack([c[0] + r * np.cos(t), c[1] + r * np.sin(t)], 1)
    return polygon(pts, size)


def region_of(mask, rgb=None):
    mask = np.asarray(mask, bool)
    if rgb is None:
        rgb = np.zeros(mask.shape + (3,), np.uint8)
        rgb[mask] = (60, 140, 40)
    return extract_region(rgb, mask)


# ---------------------------------------------------------------------------
# synthetic leaf photographs


def species_params(n_species, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_species):
        out.append(
            dict(
                width=rng.uniform(0.25, 0.7),
                skew=rng.uniform(0.0, 0.45),
                lobes=int(rng.integers(0, 7)),
                lobe_amp=rng.uniform(0.0, 0.12),
                color=rng.uniform([30, 90, 20], [110, 190, 90]),
                vein_spacing=int(rng.integers(6, 18)),
                vein_gain=rng.uniform(20, 60),
                noise=rng.uniform(2, 14),
            )
        )
    return out


def synthetic_leaf(params, rng, size=200):
    """White-background RGB photo of one leaf drawn from ``params`` with
    per-sample jitter in pose, scale and color."""
    p = params
    L = size * 0.36 * rng.uniform(0.9, 1.1)
    rot = rng.uniform(0, 2 * np.pi)
    t = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    w = p["width"] * rng.uniform(0.95, 1.05)
    x = L * np.cos(t)
    y = L * w * np.sin(t) * (1 + p["skew"] * np.cos(t))
    if p["lobes"]:
        bump = 1 + p["lobe_amp"] * np.abs(np.sin(p["lobes"] * t))
        x, y = x * bump, y * bump
    c = size / 2 + rng.uniform(-6, 6, 2)
    ca, sa = np.cos(rot), np.sin(rot)
    pts = np.stack([c[0] + x * ca - y * sa, c[1] + x * sa + y * ca], 1)
    mask = polygon(pts, size)

    base = np.clip(p["color"] + rng.normal(0, 4, 3), 0, 255)
    img = np.full((size, size, 3), 250.0)
    leaf = base + rng.normal(0, p["noise"], (size, size, 1))
    # veins: midrib plus lateral lines along the leaf axis
    veins = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(veins)
    tip0, tip1 = (c[0] - L * ca, c[1] - L * sa), (c[0] + L * ca, c[1] + L * sa)
    draw.line([tip0, tip1], fill=255, width=2)
    for s in np.arange(-L, L, p["vein_spacing"]):
        a = (c[0] + s * ca, c[1] + s * sa)
        for side in (-1, 1):
            e = (a[0] + 0.6 * L * (ca * 0.5 - side * sa), a[1] + 0.6 * L * (sa * 0.5 + side * ca))
            draw.line([a, e], fill=255, width=1)
    v = np.asarray(veins, dtype=np.float64)[..., None] / 255
    leaf = leaf + v * p["vein_gain"]
    img[mask] = leaf[mask]
    img += rng.normal(0, 1.5, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_synthetic_dataset(root, n_species=4, per_class=12, seed=0, size=200):
    """PNG files plus ``manifest.csv`` under ``root``; returns the manifest path."""
    from pathlib import Path

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    lines = ["path,class_id,class_name"]
    for j, params in enumerate(species_params(n_species, seed)):
        for k in range(per_class):
            name = f"s{j:02d}_{k:03d}.png"
            Image.fromarray(synthetic_leaf(params, rng, size)).save(root / name)
            lines.append(f"{name},{j},species {j}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
