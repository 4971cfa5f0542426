"""JSON model files.

Layout: ``version``, ``sigma``, ``feature_selection``, ``columns``,
``normalization {min, max}``, ``classes [{name, exemplars}]`` and a SHA-256
``checksum`` over the canonical JSON of everything else. Python's float repr
round-trips exactly, so a loaded model scores bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import CorruptModel, MissingFile, VersionMismatch
from .normalization import NormalizationParams
from .pipeline import Classifier, FeatureSelection
from .pnn import PnnModel

FORMAT_VERSION = 1


def _checksum(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def to_payload(clf: Classifier) -> dict:
    model = clf.model
    payload = {
        "version": FORMAT_VERSION,
        "sigma": model.sigma,
        "feature_selection": clf.selection.to_dict(),
        "columns": clf.selection.columns(),
        "normalization": {"min": clf.params.x_min.tolist(), "max": clf.params.x_max.tolist()},
        "classes": [{"name": name, "exemplars": ex.tolist()} for name, ex in zip(model.class_names, model.exemplars)],
    }
    payload["checksum"] = _checksum(payload)
    return payload


def save_model(clf: Classifier, path: str | os.PathLike) -> None:
    text = json.dumps(to_payload(clf), allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def from_payload(payload: dict) -> Classifier:
    if not isinstance(payload, dict) or "version" not in payload:
        raise CorruptModel("not a model file")
    if payload["version"] != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {payload['version']!r}, expected {FORMAT_VERSION}")
    body = {k: v for k, v in payload.items() if k != "checksum"}
    if payload.get("checksum") != _checksum(body):
        raise CorruptModel("checksum mismatch")
    try:
        sel = FeatureSelection.from_dict(payload["feature_selection"])
        norm = payload["normalization"]
        params = NormalizationParams(np.array(norm["min"], dtype=np.float64), np.array(norm["max"], dtype=np.float64))
        classes = payload["classes"]
        exemplars = tuple(np.array(c["exemplars"], dtype=np.float64).reshape(len(c["exemplars"]), -1) for c in classes)
        model = PnnModel(exemplars, float(payload["sigma"]), tuple(c["name"] for c in classes))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"bad model structure: {exc}") from exc
    d = sel.dimension
    if params.dimension != d or any(e.shape[1] != d or len(e) == 0 for e in exemplars):
        raise CorruptModel("dimension mismatch inside model file")
    return Classifier(model, params, sel)


def load_model(path: str | os.PathLike) -> Classifier:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"model not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"{path}: unreadable model file ({exc})") from exc
    return from_payload(payload)
