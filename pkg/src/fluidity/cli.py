"""Operator entry point: ingest -> features -> (split) -> train -> evaluate.

Stages communicate through files so each is independently testable and
precomputed NSP scores slot in naturally.  Exit codes: 0 success,
2 validation/config, 3 data dependency, 4 transport.
"""

from __future__ import annotations

import argparse
import collections
import os
import sys
from pathlib import Path

from . import __version__, analysis, bleu, classifier, corpus, features, nsp
from .errors import ConfigError, FluidityError
from .manifest import RunManifest, file_sha256, write_manifest


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FluidityError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidity",
        description="Attribute-based dialogue fluidity metric pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a raw dataset and emit the normalized form")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", required=True, choices=("single", "multi"))
    p.add_argument("--output", required=True)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("features", help="extract attribute features for every instance")
    p.add_argument("--dataset", required=True, help="normalized dataset from 'ingest'")
    p.add_argument("--output", required=True)
    p.add_argument("--nsp", default="stub", help="stub, file:PATH, or remote[:URL]")
    p.add_argument("--nsp-threshold", type=float, default=nsp.DEFAULT_THRESHOLD)
    p.add_argument("--nsp-timeout", type=float, default=10.0)
    p.add_argument("--length-threshold", type=int, default=5)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--with-bleu", action=argparse.BooleanOptionalAction, default=True,
                   help="append a per-instance BLEU score to each record")
    p.add_argument("--bleu-max-n", type=int, default=4)
    p.add_argument("--bleu-smoothing", choices=("none", "add-k"), default="none")
    p.add_argument("--bleu-k", type=float, default=1.0)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("split", help="deterministic stratified train/test split of a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--test-fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-output", required=True)
    p.add_argument("--test-output", required=True)
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train", help="train the linear SVM combiner on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--class-weighting", choices=("balanced", "none"), default="balanced")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a feature file and write reports")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True, help="base path; writes .md/.json/.histogram.csv")
    p.add_argument("--bleu-baseline", action="store_true",
                   help="also fit and score the BLEU-threshold baseline")
    p.add_argument("--train-features", default=None,
                   help="feature file to fit baseline thresholds on (default: eval file)")
    p.add_argument("--format", default="md,json,csv",
                   help="comma-separated subset of md,json,csv")
    p.set_defaults(handler=cmd_evaluate)

    return parser


def cmd_ingest(args: argparse.Namespace) -> int:
    if args.kind == "single":
        items: list[corpus.Instance] = list(corpus.load_single_turn(args.input))
        scale = corpus.SINGLE_TURN_SCALE
    else:
        items = list(corpus.load_multi_turn(args.input))
        scale = corpus.MULTI_TURN_SCALE

    manifest = RunManifest(
        command="ingest",
        config={"kind": args.kind},
        inputs={args.input: file_sha256(args.input)},
    )
    sidecar = write_manifest(args.output, manifest)
    corpus.save_dataset(items, args.output, manifest=sidecar.name)

    distribution = collections.Counter(corpus.category_of(item) for item in items)
    print(f"ingested {len(items)} {args.kind}-turn instances -> {args.output}")
    print("category distribution: "
          + ", ".join(f"{c}: {distribution.get(c, 0)}" for c in range(1, scale + 1)))
    return 0


def _bleu_config(args: argparse.Namespace) -> bleu.BleuConfig:
    return bleu.BleuConfig(max_n=args.bleu_max_n, smoothing=args.bleu_smoothing, k=args.bleu_k)


def cmd_features(args: argparse.Namespace) -> int:
    kind, items = corpus.load_dataset(args.dataset)

    backend_spec = args.nsp
    if backend_spec == "remote":
        url = os.environ.get("FLUIDITY_NSP_URL")
        if not url:
            raise ConfigError("--nsp remote needs a URL or FLUIDITY_NSP_URL set")
        backend_spec = f"remote:{url}"
    backend_config = nsp.parse_backend_spec(
        backend_spec, threshold=args.nsp_threshold, timeout=args.nsp_timeout
    )
    backend = nsp.make_backend(backend_config)

    feature_config = features.FeatureConfig(length_threshold=args.length_threshold)
    bleu_config = _bleu_config(args)
    scorer = (lambda item: bleu.instance_bleu(item, bleu_config)) if args.with_bleu else None

    records = features.extract_dataset(
        items,
        backend,
        feature_config,
        workers=max(1, args.workers),
        bleu_scorer=scorer,
        progress=lambda n: print(f"processed {n} instances", file=sys.stderr),
    )

    manifest = RunManifest(
        command="features",
        config={
            "nsp": {"kind": backend_config.kind, "threshold": backend_config.threshold},
            "features": feature_config.echo(),
            "bleu": bleu_config.echo() if args.with_bleu else None,
            "workers": args.workers,
        },
        inputs={args.dataset: file_sha256(args.dataset)},
    )
    sidecar = write_manifest(args.output, manifest)
    features.write_feature_file(
        args.output,
        records,
        kind=kind,
        config=feature_config,
        extra_header={
            "manifest": sidecar.name,
            "nsp": {"kind": backend_config.kind, "threshold": backend_config.threshold},
            "bleu": bleu_config.echo() if args.with_bleu else None,
        },
    )
    print(f"extracted features for {len(records)} instances -> {args.output}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    header, records = features.read_feature_file(args.features)
    train_records, test_records = corpus.split(
        records, args.test_fraction, args.seed, category=lambda r: r.target
    )
    config = features.FeatureConfig(
        length_threshold=header.get("config", {}).get("length_threshold", 5)
    )
    manifest = RunManifest(
        command="split",
        config={"test_fraction": args.test_fraction},
        inputs={args.features: file_sha256(args.features)},
        seed=args.seed,
    )
    for path, part in ((args.train_output, train_records), (args.test_output, test_records)):
        sidecar = write_manifest(path, manifest)
        features.write_feature_file(
            path, part, kind=header.get("kind", "single"), config=config,
            extra_header={"manifest": sidecar.name},
        )
    print(f"split {len(records)} records into {len(train_records)} train"
          f" + {len(test_records)} test")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    _, records = features.read_feature_file(args.features)
    vectors, targets, ids = features.feature_matrix(records)
    config = classifier.TrainConfig(
        C=args.C,
        epochs=args.epochs,
        seed=args.seed,
        tolerance=args.tolerance,
        class_weighting=args.class_weighting,
    )
    model = classifier.train(vectors, targets, config, ids=ids)
    manifest = RunManifest(
        command="train",
        config=config.echo(),
        inputs={args.features: file_sha256(args.features)},
        seed=args.seed,
    )
    sidecar = write_manifest(args.model, manifest)
    classifier.save_model(
        model, args.model,
        training_data_sha256=file_sha256(args.features),
        manifest_ref=sidecar.name,
    )

    accuracy = classifier.training_accuracy(model, vectors, targets)
    print(f"trained on {len(records)} records, classes {list(model.classes)} -> {args.model}")
    print(f"training accuracy: {accuracy:.4f}")
    print("final objectives: "
          + ", ".join(f"{cls}: {obj:.6f}" for cls, obj in zip(model.classes, model.final_objectives)))
    if model.scaler.dropped:
        print(f"dropped zero-variance features: {', '.join(model.scaler.dropped)}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    formats = {f.strip() for f in args.format.split(",") if f.strip()}
    unknown = formats - {"md", "json", "csv"}
    if unknown:
        raise ConfigError(f"unknown report format {sorted(unknown)[0]!r}")

    model = classifier.load_model(args.model)
    header, records = features.read_feature_file(args.features)
    vectors, targets, _ = features.feature_matrix(records)

    available = set(vectors[0].keys()) if vectors else set()
    missing = [n for n in model.feature_names if n not in available]
    if missing:
        raise ConfigError(
            f"feature file lacks model feature {missing[0]!r}"
            f" (model was trained on: {', '.join(model.feature_names)})"
        )

    predictions = classifier.predict_batch(model, vectors)
    f1 = analysis.f1_scores(predictions, targets)
    correlations = analysis.feature_correlations(vectors, [float(t) for t in targets])
    scale_max = corpus.SINGLE_TURN_SCALE if header.get("kind") == "single" else corpus.MULTI_TURN_SCALE
    labels = [int(v["nsp_label"]) if "nsp_label" in v else 0 for v in vectors]
    histogram = analysis.category_histogram(targets, labels, scale_max=scale_max)

    notes = [
        "single-turn targets are floor-binned mean ratings; multi-turn targets are the given 1-4 score",
        "repetition n-grams are casefolded",
    ]
    comparison = None
    baseline_info: dict | None = None
    if args.bleu_baseline:
        comparison, baseline_info, baseline_note = _run_baseline(
            args, records, targets, f1.macro_f1
        )
        notes.append(baseline_note)

    report = analysis.EvaluationReport(
        dataset_kind=header.get("kind", "unknown"),
        n_instances=len(records),
        feature_correlations=correlations,
        f1=f1,
        histogram=histogram,
        comparison=comparison,
        config_echo={
            "model_config": model.config.echo(),
            "model_features": list(model.feature_names),
            "dropped_features": list(model.scaler.dropped),
            "feature_header": {k: v for k, v in header.items() if k != "schema"},
            "baseline": baseline_info,
        },
        notes=tuple(notes),
    )

    manifest = RunManifest(
        command="evaluate",
        config={"formats": sorted(formats), "bleu_baseline": args.bleu_baseline},
        inputs={
            args.model: file_sha256(args.model),
            args.features: file_sha256(args.features),
        },
    )
    write_manifest(args.report, manifest)

    base = Path(args.report)
    base.parent.mkdir(parents=True, exist_ok=True)
    document = report.to_json_dict()
    document["manifest"] = base.name + ".manifest.json"
    if "md" in formats:
        Path(f"{base}.md").write_text(report.to_markdown(), encoding="utf-8")
    if "json" in formats:
        import json as _json

        Path(f"{base}.json").write_text(
            _json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if "csv" in formats:
        Path(f"{base}.histogram.csv").write_text(report.histogram_csv(), encoding="utf-8")

    print(f"macro-F1: {f1.macro_f1:.4f} over {len(records)} instances")
    if comparison is not None:
        relative = ("n/a" if comparison.relative_delta is None
                    else f"{comparison.relative_delta:+.2%}")
        print(f"baseline macro-F1: {comparison.baseline_macro_f1:.4f} "
              f"(delta {comparison.absolute_delta:+.4f} absolute, {relative} relative)")
    print(f"reports written to {base}.*")
    return 0


def _run_baseline(args, records, targets, combined_macro_f1):
    """Fit BLEU thresholds and score the baseline; returns (comparison, info, note)."""
    if any(r.bleu is None for r in records):
        raise ConfigError(
            "--bleu-baseline needs records with a 'bleu' value; "
            "re-run 'fluidity features' with --with-bleu"
        )
    if args.train_features:
        _, fit_records = features.read_feature_file(args.train_features)
        if any(r.bleu is None for r in fit_records):
            raise ConfigError(f"{args.train_features}: records lack 'bleu' values")
        note = f"baseline thresholds fitted on {args.train_features}"
    else:
        fit_records = records
        note = "baseline thresholds fitted on the evaluation file itself (no --train-features)"

    n_categories = max(max(r.target for r in fit_records), max(targets))
    thresholds = bleu.fit_thresholds(
        [r.bleu for r in fit_records], [r.target for r in fit_records],
        n_categories=n_categories,
    )
    baseline_predictions = [bleu.classify_score(r.bleu, thresholds) for r in records]
    baseline_f1 = analysis.f1_scores(baseline_predictions, targets)
    comparison = analysis.comparison_report(combined_macro_f1, baseline_f1.macro_f1)
    info = {
        "thresholds": thresholds,
        "fitted_on": args.train_features or args.features,
        "baseline_macro_f1": baseline_f1.macro_f1,
    }
    return comparison, info, note


if __name__ == "__main__":
    sys.exit(main())
