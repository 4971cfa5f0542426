import json

import numpy as np
import pytest

from leafpnn import model_io, pipeline
from leafpnn.dataset import load_image, load_manifest
from leafpnn.errors import CorruptModel, DataError, VersionMismatch
from leafpnn.pipeline import FeatureSelection, FeatureTable
from leafpnn.segmentation import crop_to_mask, segment
from shapes import species_params, synthetic_leaf


def toy_table(n_per_class=5, C=3, d=4, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(C), n_per_class)
    X = rng.normal(y[:, None] * 3.0, 0.3, (len(y), d))
    sel = FeatureSelection.from_groups("geo")
    cols = [f"x.{i}" for i in range(d)]
    return FeatureTable([f"img{i}" for i in range(len(y))], y, cols, X), sel


def test_column_counts():
    assert FeatureSelection.from_groups("pft").dimension == 35
    best = FeatureSelection()
    assert best.dimension == 35 + 3 + 9 + 12 + 3 == 62
    assert FeatureSelection.from_groups("pft,geo,color,texture,vein", kurtosis=True).dimension == 65
    assert len(best.columns()) == 62 and len(set(best.columns())) == 62


def test_group_order_fixed():
    a = FeatureSelection.from_groups("vein,pft,color")
    assert a.groups == ["pft", "color_mean", "color_std", "color_skew", "vein"]
    assert a.columns()[:2] == ["pft.0", "pft.1"] and a.columns()[-1] == "vein.2"


def test_selection_roundtrips():
    sel = FeatureSelection.from_groups("pft,texture", kurtosis=True, m=3, lacunarity_powers=(2, 3))
    assert FeatureSelection.from_dict(json.loads(json.dumps(sel.to_dict()))) == sel
    assert FeatureSelection.from_columns(sel.columns(), m=3, lacunarity_powers=(2, 3)) == sel
    with pytest.raises(ValueError):
        FeatureSelection.from_groups("pft,leafiness")
    with pytest.raises(ValueError):
        FeatureSelection.from_groups("")


def test_ablation_rows():
    sels = pipeline.ablation_selections()
    assert len(sels) == 11 == len(pipeline.PUBLISHED_ACCURACY)
    assert [s.dimension for s in sels] == [35, 38, 41, 44, 47, 50, 62, 59, 50, 62, 65]
    assert sels[pipeline.BEST_ROW] == FeatureSelection()
    assert pipeline.PUBLISHED_ACCURACY[pipeline.BEST_ROW] == max(pipeline.PUBLISHED_ACCURACY)


def test_extract_features_on_leaf():
    img = synthetic_leaf(species_params(1, seed=5)[0], np.random.default_rng(0))
    fv = pipeline.extract_features(img, FeatureSelection(), "leaf", 0)
    assert fv.values.shape == (62,) and np.isfinite(fv.values).all()
    assert list(fv.columns) == FeatureSelection().columns()


def test_crop_does_not_change_features():
    img = synthetic_leaf(species_params(2, seed=1)[1], np.random.default_rng(4))
    sel = FeatureSelection(color_kurtosis=True)
    region = segment(img)
    full = pipeline.features_from_region(region, sel)
    cropped = pipeline.features_from_region(crop_to_mask(region, pipeline.crop_margin(sel)), sel)
    assert np.array_equal(full, cropped)


def test_blank_image_fails_with_id():
    with pytest.raises(DataError, match="blank.png"):
        pipeline.extract_features(np.full((50, 50, 3), 255, np.uint8), FeatureSelection(), "blank.png")


def test_csv_roundtrip(tmp_path):
    t, _ = toy_table()
    t.values[0, 0] = 1 / 3
    t.values[2] = np.nan
    t.errors = {2: "EmptyMask: nothing"}
    sel = FeatureSelection.from_groups("geo")
    p = tmp_path / "f.csv"
    pipeline.write_feature_csv(t, p, sel)
    back = pipeline.read_feature_csv(p)
    assert back.image_ids == t.image_ids and back.columns == t.columns
    assert np.array_equal(back.class_ids, t.class_ids)
    assert np.array_equal(back.values, t.values, equal_nan=True)
    assert back.errors == {2: "EmptyMask: nothing"}
    assert pipeline.read_selection_meta(p) == sel
    assert p.read_text().splitlines()[0] == "image_id,class_id,x.0,x.1,x.2,x.3"


def test_csv_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("image_id,class_id,a.0\nx,0,1.0\ny,1\n")
    with pytest.raises(DataError, match="row 3"):
        pipeline.read_feature_csv(p)


def _classifier(table, sel=None):
    sel = sel or FeatureSelection.from_groups("geo")
    t = FeatureTable(table.image_ids, table.class_ids, sel.columns(), table.values[:, :3], dict(table.errors))
    return pipeline.train_classifier(t, sel, 0.5), t


def test_evaluate_perfect_is_diagonal():
    table, _ = toy_table()
    clf, t = _classifier(table)
    rep = pipeline.evaluate(clf, t)
    assert rep.accuracy == 1.0 and rep.n_t == 15
    assert np.array_equal(rep.confusion, np.diag([5, 5, 5]))
    for i in range(len(t)):
        assert rep.predictions[i] == clf.classify(t.values[i])[0]


def test_accuracy_is_weighted_per_class_mean():
    rng = np.random.default_rng(7)
    train, _ = toy_table(seed=1)
    clf, _ = _classifier(train)
    y = rng.integers(0, 3, 40)
    X = rng.normal(rng.integers(0, 3, 40)[:, None] * 3.0, 1.0, (40, 3))
    test = FeatureTable([str(i) for i in range(40)], y, clf.selection.columns(), X)
    rep = pipeline.evaluate(clf, test)
    assert rep.accuracy == pytest.approx(float((rep.per_class_accuracy * rep.per_class_total).sum() / rep.n_t))
    assert rep.confusion.sum() == 40


def test_accuracy_300_of_320():
    # 32 classes, one exemplar each; 20 of the 320 test vectors sit on a wrong exemplar
    C = 32
    X = np.eye(C)
    sel = FeatureSelection.from_groups("pft", m=3, n=7)
    train = FeatureTable([f"t{j}" for j in range(C)], np.arange(C), sel.columns(), X)
    clf = pipeline.train_classifier(train, sel, 0.05)
    y = np.repeat(np.arange(C), 10)
    pred = y.copy()
    pred[:20] = (y[:20] + 1) % C
    test = FeatureTable([str(i) for i in range(320)], y, sel.columns(), X[pred])
    rep = pipeline.evaluate(clf, test)
    assert (rep.n_r, rep.n_t, rep.accuracy) == (300, 320, 0.9375)


def test_failures_count_as_errors():
    table, _ = toy_table()
    clf, t = _classifier(table)
    t.values[0] = np.nan
    t.errors = {0: "EmptyMask: x"}
    rep = pipeline.evaluate(clf, t)
    assert (rep.n_r, rep.n_t) == (14, 15)
    assert rep.failures == [("img0", "EmptyMask: x")] and rep.predictions[0] == -1
    assert rep.per_class_accuracy[0] == pytest.approx(0.8)
    assert "counted as errors" in rep.to_text()


def test_train_drops_failed_rows():
    table, _ = toy_table()
    table.values[1] = np.nan
    clf, _ = _classifier(table)
    assert len(clf.model.exemplars[0]) == 4


def test_ablation_on_tables():
    table, _ = toy_table(n_per_class=6)
    sel = FeatureSelection.from_groups("geo")
    t = FeatureTable(table.image_ids, table.class_ids, sel.columns(), table.values[:, :3])
    train, test = t.subset(range(0, 18, 2)), t.subset(range(1, 18, 2))
    rows = pipeline.run_ablation_on_tables(train, test, [sel, sel])
    assert len(rows) == 2 and rows[0] == rows[1]
    assert rows[0].n_t == 9 and rows[0].dimension == 3
    text = pipeline.format_ablation(rows, [0.5, 0.5])
    assert "3 geometric features" in text and "Published" in text


def test_run_ablation_synthetic(synthetic_manifest, tmp_path):
    m = load_manifest(synthetic_manifest)
    sels = pipeline.ablation_selections()
    cache = tmp_path / "cache.csv"
    rows = pipeline.run_ablation(m, 0, 0.05, sels, train_per_class=8, test_per_class=4, cache=cache)
    assert len(rows) == 11 and all(r.n_t == 20 for r in rows)
    assert rows[pipeline.BEST_ROW].accuracy >= 0.8
    again = pipeline.run_ablation(m, 0, 0.05, sels, train_per_class=8, test_per_class=4, cache=cache)
    assert again == rows


def test_model_roundtrip(tmp_path):
    table, _ = toy_table()
    clf, t = _classifier(table)
    p = tmp_path / "m.json"
    model_io.save_model(clf, p)
    back = model_io.load_model(p)
    assert back.selection == clf.selection and back.class_names == clf.class_names
    rng = np.random.default_rng(0)
    for x in rng.normal(3, 4, (50, 3)):
        a, sa = clf.classify(x)
        b, sb = back.classify(x)
        assert a == b and np.array_equal(sa.scores, sb.scores)


def test_model_version_and_corruption(tmp_path):
    table, _ = toy_table()
    clf, _ = _classifier(table)
    p = tmp_path / "m.json"
    model_io.save_model(clf, p)
    payload = json.loads(p.read_text())
    payload["version"] = 2
    p2 = tmp_path / "v2.json"
    p2.write_text(json.dumps(payload))
    with pytest.raises(VersionMismatch):
        model_io.load_model(p2)
    p3 = tmp_path / "trunc.json"
    p3.write_text(p.read_text()[:100])
    with pytest.raises(CorruptModel):
        model_io.load_model(p3)
    payload["version"] = 1
    payload["sigma"] = 0.7
    p4 = tmp_path / "tampered.json"
    p4.write_text(json.dumps(payload))
    with pytest.raises(CorruptModel, match="checksum"):
        model_io.load_model(p4)


def test_classify_image(synthetic_manifest):
    m = load_manifest(synthetic_manifest)
    sel = FeatureSelection()
    table = pipeline.extract_entries(m.entries, sel, jobs=1)
    clf = pipeline.train_classifier(table, sel, 0.05, m.class_names)
    e = m.entries[0]
    pred, scores = clf.classify_image(load_image(e.path))
    # the image is one of 12 class exemplars: its own kernel contributes 1/12
    assert pred == e.class_id and scores.scores[pred] >= 1 / 12
