"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import dataset, model_io, pipeline
from .errors import DataError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("leafpnn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _selection(args) -> pipeline.FeatureSelection:
    try:
        return pipeline.FeatureSelection.from_groups(args.features, kurtosis=args.kurtosis, invert=args.invert)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_extract(args) -> int:
    sel = _selection(args)
    m = dataset.load_manifest(args.manifest)
    table = pipeline.extract_entries(m.entries, sel, jobs=args.jobs)
    pipeline.write_feature_csv(table, args.out, sel)
    print(f"wrote {len(table)} rows x {len(table.columns)} features to {args.out} ({len(table.errors)} failed)")
    return EXIT_OK


def cmd_split(args) -> int:
    m = dataset.load_manifest(args.manifest)
    split = dataset.split_dataset(m, args.train, args.test, args.seed, ordered=args.ordered)
    dataset.write_manifest(split.train, args.out_train)
    dataset.write_manifest(split.test, args.out_test)
    print(f"train: {len(split.train)} -> {args.out_train}\ntest: {len(split.test)} -> {args.out_test}")
    return EXIT_OK


def cmd_train(args) -> int:
    table = pipeline.read_feature_csv(args.features)
    sel = pipeline.read_selection_meta(args.features) or pipeline.FeatureSelection.from_columns(table.columns)
    if args.groups:
        sel = sel.with_groups(pipeline.FeatureSelection.from_groups(args.groups).groups)
    names = None
    if args.manifest:
        names = dataset.load_manifest(args.manifest).class_names
    clf = pipeline.train_classifier(table, sel, args.sigma, names)
    model_io.save_model(clf, args.out)
    print(f"trained PNN: {clf.model.n_classes} classes, {sel.dimension} features, sigma={args.sigma} -> {args.out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    clf = model_io.load_model(args.model)
    img = dataset.load_image(args.image)
    pred, scores = clf.classify_image(img)
    print(clf.class_names[pred])
    for j, s in scores.top(args.top):
        print(f"  {s:.6g}\t{j}\t{clf.class_names[j]}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    clf = model_io.load_model(args.model)
    table = pipeline.read_feature_csv(args.features)
    report = pipeline.evaluate(clf, table)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text(), end="")
    return EXIT_OK


def cmd_ablate(args) -> int:
    m = dataset.load_manifest(args.manifest)
    base = pipeline.FeatureSelection(invert=args.invert)
    rows = pipeline.run_ablation(
        m, args.seed, args.sigma, pipeline.ablation_selections(base),
        train_per_class=args.train, test_per_class=args.test,
        jobs=args.jobs, cache=args.cache, ordered=args.ordered,
    )
    print(pipeline.format_ablation(rows, pipeline.PUBLISHED_ACCURACY), end="")
    return EXIT_OK


def cmd_flavia_manifest(args) -> int:
    entries = dataset.flavia_entries(args.images)
    if not entries:
        raise DataError(f"no Flavia images (<number>.jpg) found in {args.images}")
    dataset.write_manifest(entries, args.out)
    m = dataset.load_manifest(args.out)
    print(f"wrote {len(m.entries)} entries, {m.n_classes} classes -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="leafpnn", description="Leaf classification with shape, color, texture and vein features and a PNN.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def features_opts(sp):
        sp.add_argument("--features", default="pft,geo,color,texture,vein", help="comma-separated groups: pft,geo,color,texture,vein")
        sp.add_argument("--kurtosis", action="store_true", help="add color kurtosis")
        sp.add_argument("--invert", action="store_true", help="leaf is brighter than the background")

    sp = sub.add_parser("extract", help="extract a feature CSV from a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    features_opts(sp)
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("split", help="seeded per-class train/test split of a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--train", type=int, default=40)
    sp.add_argument("--test", type=int, default=10)
    sp.add_argument("--ordered", action="store_true", help="take entries in manifest order instead of shuffling")
    sp.add_argument("--out-train", required=True)
    sp.add_argument("--out-test", required=True)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("train", help="train a PNN from a feature CSV")
    sp.add_argument("--features", required=True)
    sp.add_argument("--sigma", type=float, default=0.05)
    sp.add_argument("--groups", help="restrict to these feature groups")
    sp.add_argument("--manifest", help="manifest supplying class names")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("classify", help="classify one image")
    sp.add_argument("--model", required=True)
    sp.add_argument("--image", required=True)
    sp.add_argument("--top", type=int, default=5)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("evaluate", help="accuracy of a model on a labelled feature CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ablate", help="run the feature-group ablation table")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sigma", type=float, default=0.05)
    sp.add_argument("--train", type=int, default=40)
    sp.add_argument("--test", type=int, default=10)
    sp.add_argument("--ordered", action="store_true")
    sp.add_argument("--invert", action="store_true")
    sp.add_argument("--cache", help="feature CSV to reuse or create")
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("flavia-manifest", help="write a manifest for a Flavia image directory")
    sp.add_argument("--images", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_flavia_manifest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"leafpnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"leafpnn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
