"""Dataset manifests, seeded per-class train/test splits and image decoding."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    InsufficientClassSize,
    MalformedRow,
    MissingFile,
    NonContiguousClassIds,
    UnsupportedFormat,
)

MANIFEST_HEADER = ("path", "class_id", "class_name")
SUPPORTED_FORMATS = {"JPEG", "PNG"}


class ManifestEntry(NamedTuple):
    path: Path
    class_id: int
    class_name: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    @property
    def n_classes(self) -> int:
        return len({e.class_id for e in self.entries})

    @property
    def class_names(self) -> list[str]:
        names: dict[int, str] = {}
        for e in self.entries:
            names.setdefault(e.class_id, e.class_name)
        return [names[i] for i in range(len(names))]

    def by_class(self) -> dict[int, list[ManifestEntry]]:
        groups: dict[int, list[ManifestEntry]] = {}
        for e in self.entries:
            groups.setdefault(e.class_id, []).append(e)
        return dict(sorted(groups.items()))


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[ManifestEntry, ...]
    test: tuple[ManifestEntry, ...]
    seed: int
    meta: dict = field(default_factory=dict, compare=False)


def validate_entries(entries: Iterable[ManifestEntry]) -> DatasetManifest:
    entries = tuple(entries)
    seen: set[Path] = set()
    for e in entries:
        if e.path in seen:
            raise MalformedRow(0, f"duplicate path {e.path}")
        seen.add(e.path)
    ids = sorted({e.class_id for e in entries})
    if ids != list(range(len(ids))):
        raise NonContiguousClassIds(f"class ids must be 0..C-1, got {ids}")
    return DatasetManifest(entries)


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Read a ``path,class_id,class_name`` CSV.

    Relative image paths are resolved against the manifest's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    base = path.parent
    entries = []
    seen: dict[Path, int] = {}
    # newline="" lets csv accept both LF and CRLF
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise MalformedRow(1, f"header must be {','.join(MANIFEST_HEADER)}")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise MalformedRow(rowno, f"expected 3 fields, got {len(row)}")
            raw_path, raw_id, name = (c.strip() for c in row)
            if not raw_path:
                raise MalformedRow(rowno, "empty path")
            try:
                class_id = int(raw_id)
            except ValueError:
                raise MalformedRow(rowno, f"class_id {raw_id!r} is not an integer") from None
            if class_id < 0:
                raise MalformedRow(rowno, f"negative class_id {class_id}")
            p = Path(raw_path)
            if not p.is_absolute():
                p = base / p
            if p in seen:
                raise MalformedRow(rowno, f"duplicate path (first at row {seen[p]})")
            seen[p] = rowno
            entries.append(ManifestEntry(p, class_id, name))
    if not entries:
        raise MalformedRow(2, "manifest has no entries")
    return validate_entries(entries)


def write_manifest(entries: Iterable[ManifestEntry], path: str | os.PathLike) -> None:
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for e in entries:
            p = Path(e.path)
            try:
                out = p.resolve().relative_to(base).as_posix() if p.is_absolute() else p.as_posix()
            except ValueError:
                out = str(p)
            w.writerow([out, e.class_id, e.class_name])


def split_dataset(
    m: DatasetManifest,
    train_per_class: int,
    test_per_class: int,
    seed: int,
    ordered: bool = False,
) -> DatasetSplit:
    """Per-class seeded shuffle; first ``train_per_class`` go to train, the
    next ``test_per_class`` to test, the rest are dropped.

    Each class draws from its own generator keyed on ``(seed, class_id)`` so a
    class's split does not depend on the rest of the manifest. ``ordered=True``
    skips the shuffle and takes entries in manifest order.
    """
    if train_per_class < 0 or test_per_class < 0:
        raise ValueError("per-class counts must be non-negative")
    need = train_per_class + test_per_class
    train: list[ManifestEntry] = []
    test: list[ManifestEntry] = []
    for class_id, group in m.by_class().items():
        if len(group) < need:
            raise InsufficientClassSize(
                f"class {group[0].class_name!r} (id {class_id}) has {len(group)} "
                f"entries, needs {need} ({train_per_class} train + {test_per_class} test)"
            )
        if ordered:
            picked = group
        else:
            group = sorted(group, key=lambda e: str(e.path))
            rng = np.random.default_rng([seed, class_id])
            picked = [group[i] for i in rng.permutation(len(group))]
        train.extend(picked[:train_per_class])
        test.extend(picked[train_per_class:need])
    return DatasetSplit(tuple(train), tuple(test), seed)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Decode a JPEG/PNG into an ``(H, W, 3)`` uint8 RGB array."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"image not found: {path}")
    data = path.read_bytes()
    try:
        im = Image.open(io.BytesIO(data))
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: not a recognised image") from exc
    if im.format not in SUPPORTED_FORMATS:
        raise UnsupportedFormat(f"{path}: format {im.format} not supported")
    try:
        im.load()
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    if im.mode != "RGB":
        im = im.convert("RGB")
    arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DecodeError(f"{path}: empty raster")
    return np.ascontiguousarray(arr)


# Flavia file-number ranges per species, as published with the dataset.
FLAVIA_SPECIES: tuple[tuple[str, int, int], ...] = (
    ("pubescent bamboo", 1060, 1122),
    ("Chinese horse chestnut", 1552, 1616),
    ("Anhui Barberry", 1123, 1194),
    ("Chinese redbud", 1257, 1323),
    ("true indigo", 1324, 1385),
    ("Japanese maple", 1386, 1437),
    ("Nanmu", 1497, 1551),
    ("castor aralia", 1438, 1496),
    ("Chinese cinnamon", 2001, 2050),
    ("goldenrain tree", 2051, 2113),
    ("Big-fruited Holly", 2114, 2165),
    ("Japanese cheesewood", 2166, 2230),
    ("wintersweet", 2231, 2290),
    ("camphortree", 2291, 2346),
    ("Japan Arrowwood", 2347, 2423),
    ("sweet osmanthus", 2424, 2485),
    ("deodar", 2486, 2546),
    ("ginkgo, maidenhair tree", 2547, 2612),
    ("Crape myrtle, Crepe myrtle", 2616, 2675),
    ("oleander", 3001, 3055),
    ("yew plum pine", 3056, 3110),
    ("Japanese Flowering Cherry", 3111, 3175),
    ("Glossy Privet", 3176, 3229),
    ("Chinese Toon", 3230, 3281),
    ("peach", 3282, 3334),
    ("Ford Woodlotus", 3335, 3389),
    ("trident maple", 3390, 3446),
    ("Beale's barberry", 3447, 3510),
    ("southern magnolia", 3511, 3563),
    ("Canadian poplar", 3566, 3621),
    ("Chinese tulip tree", 1001, 1059),
    ("tangerine", 1195, 1256),
)


def flavia_entries(image_dir: str | os.PathLike, require_all: bool = False) -> list[ManifestEntry]:
    """Manifest entries for a Flavia image directory (``<number>.jpg`` files).

    Numbers inside a species range that have no file are skipped unless
    ``require_all`` is set.
    """
    image_dir = Path(image_dir)
    entries = []
    for class_id, (name, lo, hi) in enumerate(FLAVIA_SPECIES):
        for num in range(lo, hi + 1):
            p = image_dir / f"{num}.jpg"
            if p.is_file():
                entries.append(ManifestEntry(p, class_id, name))
            elif require_all:
                raise MissingFile(f"Flavia image {p} missing")
    return entries
