#!/usr/bin/env python3
"""Full pipeline dry run on synthetic data: the combined classifier against
the BLEU-threshold baseline, plus the per-category NSP prediction pattern.

Usage: python scripts/run_synthetic_experiment.py [--n 400] [--seed 21] [--out DIR]
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

from fluidity.analysis import category_histogram
from fluidity.corpus import split
from fluidity.features import FeatureConfig, write_feature_file
from fluidity.synth import rating_correlated_nsp, records_with_weak_bleu


def cli(*argv):
    result = subprocess.run([sys.executable, "-m", "fluidity", *map(str, argv)])
    if result.returncode != 0:
        sys.exit(result.returncode)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=400)
    parser.add_argument("--seed", type=int, default=21)
    parser.add_argument("--out", default="out/synthetic")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    records = records_with_weak_bleu(n=args.n, seed=args.seed)
    train_records, test_records = split(records, 0.25, seed=args.seed,
                                        category=lambda r: r.target)
    config = FeatureConfig()
    train_file = out / "train_features.jsonl"
    test_file = out / "test_features.jsonl"
    write_feature_file(train_file, train_records, kind="single", config=config)
    write_feature_file(test_file, test_records, kind="single", config=config)

    model = out / "model.json"
    report = out / "report"
    cli("train", "--features", train_file, "--model", model)
    cli("evaluate", "--model", model, "--features", test_file, "--report", report,
        "--bleu-baseline", "--train-features", train_file)

    document = json.loads(Path(str(report) + ".json").read_text())
    comparison = document["baseline_comparison"]
    print()
    print(f"combined macro-F1  : {comparison['combined_macro_f1']:.4f}")
    print(f"baseline macro-F1  : {comparison['baseline_macro_f1']:.4f}")
    print(f"absolute delta     : {comparison['absolute_delta']:+.4f}")

    print()
    print("per-category positive NSP prediction fraction (synthetic, rating-correlated):")
    categories, probabilities = rating_correlated_nsp(n=1000, seed=args.seed)
    labels = [int(p >= 0.5) for p in probabilities]
    for row in category_histogram(categories, labels, scale_max=5):
        bar = "#" * int(40 * (row.positive_fraction or 0.0))
        print(f"  category {row.category}: {row.positive_fraction:.2f} {bar}")


if __name__ == "__main__":
    main()
