#!/usr/bin/env python3
"""Run the whole pipeline on a single-turn CSV (Statement,Response,AMT1..5,Mean).

By default uses the stub NSP backend so it runs with no model or service;
point --nsp at file:scores.jsonl or remote:http://host:port for real scores.

Usage: python scripts/run_single_turn_pipeline.py data.csv [--out DIR] [--nsp stub]
"""

import argparse
import subprocess
import sys
from pathlib import Path


def cli(*argv):
    print("+ fluidity " + " ".join(map(str, argv)))
    result = subprocess.run([sys.executable, "-m", "fluidity", *map(str, argv)])
    if result.returncode != 0:
        sys.exit(result.returncode)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--out", default="out/single_turn")
    parser.add_argument("--nsp", default="stub")
    parser.add_argument("--test-fraction", type=float, default=0.25,
                        help="0 trains and evaluates on the whole file (tiny datasets)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = out / "dataset.jsonl"
    feats = out / "features.jsonl"
    train_file = out / "train_features.jsonl"
    test_file = out / "test_features.jsonl"
    model = out / "model.json"
    report = out / "report"

    cli("ingest", "--input", args.csv, "--kind", "single", "--output", dataset)
    cli("features", "--dataset", dataset, "--output", feats, "--nsp", args.nsp)
    if args.test_fraction > 0:
        cli("split", "--features", feats, "--test-fraction", args.test_fraction,
            "--seed", args.seed, "--train-output", train_file, "--test-output", test_file)
    else:
        train_file = test_file = feats
    cli("train", "--features", train_file, "--model", model, "--seed", args.seed)
    cli("evaluate", "--model", model, "--features", test_file, "--report", report,
        "--bleu-baseline", "--train-features", train_file)
    print(f"\nreports: {report}.md / {report}.json / {report}.histogram.csv")


if __name__ == "__main__":
    main()
