"""Feature assembly, training, evaluation and the feature-group ablation."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import normalization, pnn
from .color import color_moments
from .dataset import DatasetManifest, ManifestEntry, load_image, split_dataset
from .errors import DataError, DimensionMismatch, LeafError, MalformedRow, MissingFile
from .segmentation import crop_to_mask, segment
from .shape import geometric_features, pft_descriptors
from .texture import texture_vector
from .vein import vein_ratios

log = logging.getLogger(__name__)

GROUP_ORDER = ("pft", "geo", "color_mean", "color_std", "color_skew", "color_kurt", "texture", "vein")
_FLAG_OF_GROUP = {
    "pft": "pft",
    "geo": "geometric",
    "color_mean": "color_mean",
    "color_std": "color_std",
    "color_skew": "color_skew",
    "color_kurt": "color_kurtosis",
    "texture": "texture",
    "vein": "vein",
}


@dataclass(frozen=True)
class FeatureSelection:
    pft: bool = True
    geometric: bool = True
    color_mean: bool = True
    color_std: bool = True
    color_skew: bool = True
    color_kurtosis: bool = False
    texture: bool = True
    vein: bool = True
    m: int = 4
    n: int = 6
    radial_samples: int = 64
    angular_samples: int = 128
    lacunarity_powers: tuple[int, ...] = (2, 4, 6)
    vein_radii: tuple[int, int, int] = (1, 2, 3)
    diff_threshold: float = 10.0
    vein_margin: int = 1
    histogram_bins: int = 20
    invert: bool = False

    def __post_init__(self):
        if not any(getattr(self, _FLAG_OF_GROUP[g]) for g in GROUP_ORDER):
            raise ValueError("at least one feature group must be enabled")

    @classmethod
    def from_groups(cls, groups: str | Iterable[str], kurtosis: bool = False, **params) -> "FeatureSelection":
        """Build from CLI-style group names: pft, geo, color, texture, vein
        (plus the fine-grained color_mean/color_std/color_skew/color_kurt)."""
        names = [s.strip() for s in groups.split(",")] if isinstance(groups, str) else list(groups)
        flags = {f: False for f in _FLAG_OF_GROUP.values()}
        for name in filter(None, names):
            if name == "color":
                flags.update(color_mean=True, color_std=True, color_skew=True)
            elif name in _FLAG_OF_GROUP:
                flags[_FLAG_OF_GROUP[name]] = True
            else:
                raise ValueError(f"unknown feature group {name!r}")
        if kurtosis:
            flags["color_kurtosis"] = True
        return cls(**flags, **params)

    @property
    def groups(self) -> list[str]:
        return [g for g in GROUP_ORDER if getattr(self, _FLAG_OF_GROUP[g])]

    def group_size(self, group: str) -> int:
        if group == "pft":
            return (self.m + 1) * (self.n + 1)
        if group == "texture":
            return 4 * len(self.lacunarity_powers)
        return 3

    def columns(self) -> list[str]:
        return [f"{g}.{i}" for g in self.groups for i in range(self.group_size(g))]

    @property
    def dimension(self) -> int:
        return sum(self.group_size(g) for g in self.groups)

    def label(self) -> str:
        names = {
            "pft": "PFT",
            "geo": "3 geometric features",
            "color_mean": "mean of colors",
            "color_std": "standard deviation of colors",
            "color_skew": "skewness of colors",
            "color_kurt": "kurtosis of colors",
            "texture": f"{self.group_size('texture')} texture features",
            "vein": "3 vein features",
        }
        return " + ".join(names[g] for g in self.groups)

    def with_groups(self, groups: Iterable[str]) -> "FeatureSelection":
        groups = set(groups)
        return replace(self, **{_FLAG_OF_GROUP[g]: g in groups for g in GROUP_ORDER})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lacunarity_powers"] = list(self.lacunarity_powers)
        d["vein_radii"] = list(self.vein_radii)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSelection":
        known = {f.name for f in fields(cls)}
        d = {k: v for k, v in d.items() if k in known}
        for k in ("lacunarity_powers", "vein_radii"):
            if k in d:
                d[k] = tuple(int(v) for v in d[k])
        return cls(**d)

    @classmethod
    def from_columns(cls, columns: Sequence[str], **params) -> "FeatureSelection":
        groups = []
        for c in columns:
            g = c.rsplit(".", 1)[0]
            if g not in _FLAG_OF_GROUP:
                raise DataError(f"unknown feature column {c!r}")
            if g not in groups:
                groups.append(g)
        sel = cls.from_groups(groups, **params)
        if sel.columns() != list(columns):
            raise DataError("feature columns do not match any feature selection with these parameters")
        return sel


def union_selection(selections: Sequence[FeatureSelection]) -> FeatureSelection:
    groups = {g for s in selections for g in s.groups}
    return selections[0].with_groups(groups)


# Rows of the feature-group ablation, in the published order.
_SHAPE = ("pft", "geo")
_COLOR3 = ("color_mean", "color_std", "color_skew")
ABLATION_GROUPS: tuple[tuple[str, ...], ...] = (
    ("pft",),
    _SHAPE,
    _SHAPE + ("color_mean",),
    _SHAPE + ("color_mean", "color_std"),
    _SHAPE + _COLOR3,
    _SHAPE + _COLOR3 + ("color_kurt",),
    _SHAPE + _COLOR3 + ("color_kurt", "texture"),
    _SHAPE + _COLOR3 + ("texture",),
    _SHAPE + ("texture",),
    _SHAPE + _COLOR3 + ("texture", "vein"),
    _SHAPE + _COLOR3 + ("color_kurt", "texture", "vein"),
)
# published accuracies for the rows above, for side-by-side reporting
PUBLISHED_ACCURACY = (0.746875, 0.775, 0.825, 0.88125, 0.8875, 0.878125, 0.90625, 0.9, 0.853125, 0.9375, 0.934375)
BEST_ROW = 9


def ablation_selections(base: FeatureSelection | None = None) -> list[FeatureSelection]:
    base = base or FeatureSelection()
    return [base.with_groups(g) for g in ABLATION_GROUPS]


# ----------------------------------------------------------------------------
# extraction


@dataclass(frozen=True, eq=False)
class FeatureVector:
    image_id: str
    class_id: int | None
    values: np.ndarray
    columns: tuple[str, ...]


@dataclass(eq=False)
class FeatureTable:
    """Feature matrix; rows whose extraction failed are all-NaN and listed in
    ``errors`` by row index."""

    image_ids: list[str]
    class_ids: np.ndarray  # -1 where unknown
    columns: list[str]
    values: np.ndarray
    errors: dict[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.image_ids)

    @property
    def ok(self) -> np.ndarray:
        return ~np.isnan(self.values).any(axis=1) if self.values.size else np.ones(len(self), bool)

    def select(self, columns: Sequence[str]) -> "FeatureTable":
        index = {c: i for i, c in enumerate(self.columns)}
        missing = [c for c in columns if c not in index]
        if missing:
            raise DimensionMismatch(f"feature table lacks columns {missing[:5]}")
        idx = [index[c] for c in columns]
        return FeatureTable(list(self.image_ids), self.class_ids.copy(), list(columns), self.values[:, idx], dict(self.errors))

    def subset(self, rows: Sequence[int]) -> "FeatureTable":
        rows = list(rows)
        errors = {new: self.errors[old] for new, old in enumerate(rows) if old in self.errors}
        return FeatureTable([self.image_ids[i] for i in rows], self.class_ids[rows], list(self.columns), self.values[rows], errors)


def crop_margin(sel: FeatureSelection) -> int:
    return 2 * max(sel.vein_radii) + sel.vein_margin + 2


def features_from_region(region, sel: FeatureSelection) -> np.ndarray:
    parts = []
    if sel.pft:
        parts.append(pft_descriptors(region, sel.m, sel.n, sel.radial_samples, sel.angular_samples))
    if sel.geometric:
        parts.append(geometric_features(region))
    if sel.color_mean or sel.color_std or sel.color_skew or sel.color_kurtosis:
        cm = color_moments(region, include_kurtosis=sel.color_kurtosis)
        for flag, vals in ((sel.color_mean, cm.mean), (sel.color_std, cm.std), (sel.color_skew, cm.skewness), (sel.color_kurtosis, cm.kurtosis)):
            if flag:
                parts.append(vals)
    if sel.texture:
        parts.append(texture_vector(region, sel.lacunarity_powers))
    if sel.vein:
        parts.append(vein_ratios(region, sel.vein_radii, sel.diff_threshold, sel.vein_margin).as_array())
    return np.concatenate(parts).astype(np.float64)


def extract_features(img: np.ndarray, sel: FeatureSelection, image_id: str = "", class_id: int | None = None) -> FeatureVector:
    """Segment one RGB image and concatenate the enabled feature groups."""
    try:
        region = segment(img, sel.histogram_bins, sel.invert)
        region = crop_to_mask(region, crop_margin(sel))
        values = features_from_region(region, sel)
    except LeafError as exc:
        if image_id:
            exc.args = (f"{image_id}: {exc}",)
        raise
    return FeatureVector(image_id, class_id, values, tuple(sel.columns()))


def _extract_one(args) -> tuple[np.ndarray | None, str | None]:
    path, sel = args
    try:
        return extract_features(load_image(path), sel).values, None
    except DataError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def extract_entries(entries: Sequence[ManifestEntry], sel: FeatureSelection, jobs: int | None = 1) -> FeatureTable:
    """Extract features for manifest entries; failures become NaN rows."""
    entries = list(entries)
    jobs = jobs or os.cpu_count() or 1
    work = [(e.path, sel) for e in entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_extract_one, work, chunksize=4))
    else:
        results = [_extract_one(w) for w in work]
    cols = sel.columns()
    values = np.full((len(entries), len(cols)), np.nan)
    errors = {}
    for i, (vals, err) in enumerate(results):
        if err is None:
            values[i] = vals
        else:
            errors[i] = err
            log.warning("feature extraction failed for %s: %s", entries[i].path, err)
    return FeatureTable(
        [str(e.path) for e in entries],
        np.array([e.class_id for e in entries], dtype=np.int64),
        cols,
        values,
        errors,
    )


# ----------------------------------------------------------------------------
# feature CSV


def write_feature_csv(table: FeatureTable, path: str | os.PathLike, sel: FeatureSelection | None = None) -> None:
    """Write ``image_id,class_id,<columns>``; floats carry 17 significant
    digits. The selection, if given, goes to a ``.meta.json`` sidecar."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "class_id", *table.columns])
        for i, (iid, cid) in enumerate(zip(table.image_ids, table.class_ids)):
            w.writerow([iid, "" if cid < 0 else int(cid), *(format(v, ".17g") for v in table.values[i])])
    if sel is not None:
        meta = {"feature_selection": sel.to_dict(), "errors": {table.image_ids[i]: e for i, e in table.errors.items()}}
        Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_feature_csv(path: str | os.PathLike) -> FeatureTable:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"feature file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["image_id", "class_id"]:
            raise MalformedRow(1, "header must start with image_id,class_id")
        columns = header[2:]
        ids, cids, rows = [], [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(rowno, f"expected {len(header)} fields, got {len(row)}")
            try:
                cids.append(int(row[1]) if row[1].strip() else -1)
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise MalformedRow(rowno, str(exc)) from None
            ids.append(row[0])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    errors = {}
    meta_path = Path(str(path) + ".meta.json")
    meta_errors = json.loads(meta_path.read_text(encoding="utf-8")).get("errors", {}) if meta_path.is_file() else {}
    for i in np.flatnonzero(np.isnan(values).any(axis=1)):
        errors[int(i)] = meta_errors.get(ids[i], "feature extraction failed")
    return FeatureTable(ids, np.array(cids, dtype=np.int64), columns, values, errors)


def read_selection_meta(path: str | os.PathLike) -> FeatureSelection | None:
    meta_path = Path(str(path) + ".meta.json")
    if not meta_path.is_file():
        return None
    return FeatureSelection.from_dict(json.loads(meta_path.read_text(encoding="utf-8"))["feature_selection"])


# ----------------------------------------------------------------------------
# training / evaluation


@dataclass(frozen=True, eq=False)
class Classifier:
    """A trained PNN with the normalisation and feature selection it expects."""

    model: pnn.PnnModel
    params: normalization.NormalizationParams
    selection: FeatureSelection

    @property
    def class_names(self) -> tuple[str, ...]:
        return self.model.class_names

    def normalize(self, raw) -> np.ndarray:
        return normalization.apply(self.params, raw)

    def classify(self, raw) -> tuple[int, pnn.ClassScores]:
        return pnn.classify(self.model, self.normalize(raw))

    def classify_image(self, img: np.ndarray) -> tuple[int, pnn.ClassScores]:
        return self.classify(extract_features(img, self.selection).values)


def train_classifier(table: FeatureTable, sel: FeatureSelection, sigma: float = 0.05, class_names=None) -> Classifier:
    """Fit min-max scaling on the usable training rows, then store them in a PNN."""
    t = table.select(sel.columns())
    ok = t.ok & (t.class_ids >= 0)
    if not ok.all():
        log.warning("dropping %d training rows without features or labels", int((~ok).sum()))
    X, y = t.values[ok], t.class_ids[ok]
    params = normalization.fit(X)
    model = pnn.train(normalization.apply(params, X), y, sigma, class_names)
    return Classifier(model, params, sel)


@dataclass(eq=False)
class EvaluationReport:
    """``accuracy = n_r / n_t``. Images whose extraction failed count in
    ``n_t`` and in the per-class totals as misclassified but have no
    confusion-matrix cell; they are listed in ``failures``."""

    n_r: int
    n_t: int
    confusion: np.ndarray  # rows true class, columns predicted class
    per_class_total: np.ndarray
    predictions: list[int]  # -1 for failed extraction
    failures: list[tuple[str, str]]
    class_names: tuple[str, ...] = ()

    @property
    def accuracy(self) -> float:
        return self.n_r / self.n_t

    @property
    def per_class_accuracy(self) -> np.ndarray:
        correct = np.diag(self.confusion).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.per_class_total > 0, correct / self.per_class_total, np.nan)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_r": self.n_r,
            "n_t": self.n_t,
            "per_class_accuracy": [None if np.isnan(a) else float(a) for a in self.per_class_accuracy],
            "per_class_total": self.per_class_total.tolist(),
            "confusion": self.confusion.tolist(),
            "class_names": list(self.class_names),
            "failures": [{"image_id": i, "error": e} for i, e in self.failures],
        }

    def to_text(self) -> str:
        lines = [f"accuracy: {self.accuracy:.4%} ({self.n_r}/{self.n_t})", "", "per-class accuracy:"]
        for j, acc in enumerate(self.per_class_accuracy):
            name = self.class_names[j] if j < len(self.class_names) else str(j)
            shown = "n/a" if np.isnan(acc) else f"{acc:.4f}"
            lines.append(f"  {j:3d} {name:<32s} {shown}  ({int(self.per_class_total[j])} images)")
        if self.failures:
            lines += ["", f"unclassifiable images ({len(self.failures)}, counted as errors):"]
            lines += [f"  {i}: {e}" for i, e in self.failures]
        return "\n".join(lines) + "\n"


def evaluate(clf: Classifier, test: FeatureTable) -> EvaluationReport:
    if len(test) == 0:
        raise DataError("empty test set")
    t = test.select(clf.selection.columns())
    C = clf.model.n_classes
    if (t.class_ids < 0).any() or (t.class_ids >= C).any():
        raise DataError("test rows need class ids within the model's classes")
    confusion = np.zeros((C, C), dtype=np.int64)
    totals = np.bincount(t.class_ids, minlength=C)
    predictions, failures = [], []
    ok = t.ok
    for i in range(len(t)):
        if not ok[i]:
            predictions.append(-1)
            failures.append((t.image_ids[i], t.errors.get(i, "feature extraction failed")))
            continue
        pred, _ = clf.classify(t.values[i])
        predictions.append(pred)
        confusion[t.class_ids[i], pred] += 1
    n_r = int(np.trace(confusion))
    return EvaluationReport(n_r, len(t), confusion, totals, predictions, failures, clf.class_names)


# ----------------------------------------------------------------------------
# ablation


@dataclass(frozen=True)
class AblationRow:
    label: str
    dimension: int
    n_r: int
    n_t: int

    @property
    def accuracy(self) -> float:
        return self.n_r / self.n_t


def run_ablation_on_tables(train: FeatureTable, test: FeatureTable, selections: Sequence[FeatureSelection], sigma: float = 0.05, class_names=None) -> list[AblationRow]:
    rows = []
    for sel in selections:
        clf = train_classifier(train, sel, sigma, class_names)
        rep = evaluate(clf, test)
        rows.append(AblationRow(sel.label(), sel.dimension, rep.n_r, rep.n_t))
    return rows


def run_ablation(
    manifest: DatasetManifest,
    seed: int,
    sigma: float = 0.05,
    selections: Sequence[FeatureSelection] | None = None,
    train_per_class: int = 40,
    test_per_class: int = 10,
    jobs: int | None = 1,
    cache: str | os.PathLike | None = None,
    ordered: bool = False,
) -> list[AblationRow]:
    """One shared split; features are extracted once for the union of all
    selections (optionally cached to CSV) and each row only refits the
    normalisation and PNN."""
    selections = list(selections or ablation_selections())
    split = split_dataset(manifest, train_per_class, test_per_class, seed, ordered=ordered)
    full = union_selection(selections)
    entries = list(split.train) + list(split.test)
    table = None
    if cache is not None and Path(cache).is_file():
        cached = read_feature_csv(cache)
        wanted = {str(e.path) for e in entries}
        if wanted <= set(cached.image_ids) and set(full.columns()) <= set(cached.columns):
            pos = {iid: i for i, iid in enumerate(cached.image_ids)}
            table = cached.subset([pos[str(e.path)] for e in entries])
            log.info("reusing cached features from %s", cache)
    if table is None:
        table = extract_entries(entries, full, jobs)
        if cache is not None:
            write_feature_csv(table, cache, full)
    n_train = len(split.train)
    train = table.subset(range(n_train))
    test = table.subset(range(n_train, len(entries)))
    return run_ablation_on_tables(train, test, selections, sigma, manifest.class_names)


def format_ablation(rows: Sequence[AblationRow], published: Sequence[float] | None = None) -> str:
    width = max(len(r.label) for r in rows)
    head = f"{'Features':<{width}}  {'Dim':>4}  {'Performance':>11}"
    if published:
        head += f"  {'Published':>10}"
    lines = [head, "-" * len(head)]
    for i, r in enumerate(rows):
        line = f"{r.label:<{width}}  {r.dimension:>4}  {r.accuracy:>11.4%}"
        if published:
            line += f"  {published[i]:>10.4%}"
        lines.append(line)
    return "\n".join(lines) + "\n"
