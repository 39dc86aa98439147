"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test prints one ``ACCEPTANCE <name>: PASS/FAIL`` line; run with
``pytest tests/test_acceptance.py -v -s`` to see them all.
"""

import json
import random
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from fluidity.analysis import category_histogram, f1_scores, pearson
from fluidity.bleu import bleu, modified_precision
from fluidity.classifier import TrainConfig, predict_batch, train, training_accuracy
from fluidity.features import (
    FeatureConfig,
    FeatureRecord,
    external_repetition,
    internal_repetition,
    partner_repetition,
    write_feature_file,
)
from fluidity.nsp import write_score_file
from fluidity.synth import rating_correlated_nsp, records_with_weak_bleu, separable_clusters
from fluidity.textproc import tokenize

from oracles import (
    bleu_oracle,
    containment_oracle,
    f1_oracle,
    internal_repetition_oracle,
    pearson_oracle,
)

DATA = Path(__file__).parent / "data"


@contextmanager
def criterion(name):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    else:
        print(f"\nACCEPTANCE {name}: PASS ({time.perf_counter() - started:.2f}s)")


def test_bleu_oracle_equivalence():
    with criterion("bleu-oracle-equivalence"):
        started = time.perf_counter()

        assert modified_precision(
            "the the the the the the the", ["the cat is on the mat"], 1
        ) == (2, 7)

        vocab = ["the", "cat", "sat", "on", "a", "mat", "dog", "ran", "big", "nice"]
        rng = random.Random(616)
        pairs_checked = 0
        for _ in range(30):
            candidate = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 15)))
            references = [
                " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 15)))
                for _ in range(rng.randint(1, 3))
            ]
            ours = bleu(candidate, references)
            expected = bleu_oracle(candidate.split(), [r.split() for r in references])
            assert abs(ours - expected) <= 1e-9, (candidate, references)
            pairs_checked += 1
        assert pairs_checked >= 20
        assert time.perf_counter() - started < 1.0


def test_repetition_oracle_equivalence():
    with criterion("repetition-oracle-equivalence"):
        started = time.perf_counter()
        vocab = ["i", "you", "we", "like", "really", "pie", "tea", "the", "?", "."]
        rng = random.Random(4242)
        for _ in range(200):
            response = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 10)))
            history = [
                " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
                for _ in range(rng.randint(0, 3))
            ]
            response_tokens = [t.surface for t in tokenize(response)]
            history_tokens = [[t.surface for t in tokenize(h)] for h in history]
            for n in (1, 2, 3):
                assert internal_repetition(response, n) == internal_repetition_oracle(
                    response_tokens, n
                )
                expected = containment_oracle(response_tokens, history_tokens, n)
                assert external_repetition(response, history, n) == expected
                assert partner_repetition(response, history, n) == expected
        assert time.perf_counter() - started < 5.0


def test_statistics_oracles():
    with criterion("statistics-oracles"):
        assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) <= 1e-12
        assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - pearson_oracle(
            [1, 2, 3, 4], [1, 3, 2, 4]
        )) <= 1e-12

        report = f1_scores([1, 2, 2, 2], [1, 1, 2, 2])
        per_class, macro = f1_oracle([1, 2, 2, 2], [1, 1, 2, 2])
        assert abs(report.per_class[1].f1 - 2 / 3) <= 1e-12
        assert abs(report.per_class[2].f1 - 4 / 5) <= 1e-12
        assert abs(report.macro_f1 - macro) <= 1e-12
        assert abs(report.macro_f1 - 11 / 15) <= 1e-12

        rng = random.Random(99)
        categories = [rng.randint(1, 5) for _ in range(500)]
        labels = [rng.randint(0, 1) for _ in range(500)]
        for row in category_histogram(categories, labels, scale_max=5):
            if row.count:
                assert abs(row.positive_fraction + row.negative_fraction - 1.0) <= 1e-12


def test_classifier_separable_fixture():
    with criterion("classifier-separable-fixture"):
        started = time.perf_counter()
        vectors, targets = separable_clusters(n=240, n_classes=4, seed=11)
        indices = list(range(len(vectors)))
        from fluidity.corpus import split

        train_idx, test_idx = split(indices, 0.25, seed=3, category=lambda i: targets[i])
        train_vectors = [vectors[i] for i in train_idx]
        train_targets = [targets[i] for i in train_idx]
        test_vectors = [vectors[i] for i in test_idx]
        test_targets = [targets[i] for i in test_idx]
        assert len(train_vectors) >= 150 and len(vectors) >= 200

        model = train(train_vectors, train_targets, TrainConfig(seed=5))
        assert training_accuracy(model, train_vectors, train_targets) == 1.0

        heldout = f1_scores(predict_batch(model, test_vectors), test_targets)
        assert heldout.macro_f1 >= 0.95

        retrained = train(train_vectors, train_targets, TrainConfig(seed=5))
        assert np.array_equal(model.weights, retrained.weights)
        assert np.array_equal(model.biases, retrained.biases)
        assert time.perf_counter() - started < 10.0


def _run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "fluidity", *map(str, argv)],
        capture_output=True,
        text=True,
    )


def _pipeline(tmp_path, nsp_spec, tag):
    dataset = tmp_path / f"{tag}_dataset.jsonl"
    feats = tmp_path / f"{tag}_features.jsonl"
    model = tmp_path / f"{tag}_model.json"
    report = tmp_path / f"{tag}_report"
    steps = [
        ("ingest", "--input", DATA / "single_turn_sample.csv", "--kind", "single",
         "--output", dataset),
        ("features", "--dataset", dataset, "--output", feats, "--nsp", nsp_spec),
        ("train", "--features", feats, "--model", model),
        ("evaluate", "--model", model, "--features", feats, "--report", report,
         "--bleu-baseline"),
    ]
    for step in steps:
        result = _run_cli(*step)
        assert result.returncode == 0, (step[0], result.stderr)
    for suffix in (".md", ".json", ".histogram.csv"):
        assert Path(str(report) + suffix).exists(), suffix
    return report


def test_end_to_end_with_stub_and_file_nsp(tmp_path):
    with criterion("end-to-end-stub-and-file-nsp"):
        started = time.perf_counter()
        _pipeline(tmp_path, "stub", "stub")
        assert time.perf_counter() - started < 5.0

        # file backend over the same four Table-1 pairs
        from fluidity.corpus import load_single_turn

        items = load_single_turn(DATA / "single_turn_sample.csv")
        scores = tmp_path / "scores.jsonl"
        write_score_file(
            scores,
            [(item.statement, item.response, 0.2 + 0.2 * i) for i, item in enumerate(items)],
        )
        report = _pipeline(tmp_path, f"file:{scores}", "file")
        document = json.loads(Path(str(report) + ".json").read_text())
        assert document["n_instances"] == 4


def test_prediction_pattern_follows_ratings():
    with criterion("nsp-category-pattern"):
        categories, probabilities = rating_correlated_nsp(n=1000, seed=7, scale_max=5)
        labels = [int(p >= 0.5) for p in probabilities]
        rows = category_histogram(categories, labels, scale_max=5)
        fractions = [row.positive_fraction for row in rows]
        assert all(f is not None for f in fractions)
        assert all(a <= b for a, b in zip(fractions, fractions[1:])), fractions
        # and the probabilities really do correlate with the ratings
        assert pearson([float(c) for c in categories], probabilities) > 0.3


def test_combined_beats_bleu_threshold_baseline(tmp_path):
    with criterion("combined-vs-bleu-baseline"):
        records = records_with_weak_bleu(n=400, seed=21)
        from fluidity.corpus import split

        train_records, test_records = split(records, 0.25, seed=9,
                                            category=lambda r: r.target)
        train_file = tmp_path / "train.jsonl"
        test_file = tmp_path / "test.jsonl"
        config = FeatureConfig()
        write_feature_file(train_file, train_records, kind="single", config=config)
        write_feature_file(test_file, test_records, kind="single", config=config)

        model = tmp_path / "model.json"
        result = _run_cli("train", "--features", train_file, "--model", model)
        assert result.returncode == 0, result.stderr

        report = tmp_path / "report"
        result = _run_cli(
            "evaluate", "--model", model, "--features", test_file,
            "--report", report, "--bleu-baseline", "--train-features", train_file,
        )
        assert result.returncode == 0, result.stderr
        assert "absolute" in result.stdout and "relative" in result.stdout

        document = json.loads(Path(str(report) + ".json").read_text())
        comparison = document["baseline_comparison"]
        assert comparison["combined_macro_f1"] >= comparison["baseline_macro_f1"]
        markdown = Path(str(report) + ".md").read_text()
        assert "absolute delta" in markdown and "relative delta" in markdown
