"""Synthetic data generators for experiments and the acceptance harness.

Three kinds of controlled data:
- rating-correlated NSP probabilities (the per-category prediction pattern),
- linearly separable multi-class feature clouds with a guaranteed margin,
- feature records where the attribute set carries signal BLEU cannot see.
"""

from __future__ import annotations

import random

from .features import FEATURE_NAMES, FeatureRecord


def rating_correlated_nsp(
    n: int = 1000, seed: int = 0, scale_max: int = 5
) -> tuple[list[int], list[float]]:
    """Categories with NSP probabilities whose positive rate rises with rating.

    Category c is positive (p >= 0.5) with target rate (2c - 1) / (2 * scale),
    e.g. 0.1/0.3/0.5/0.7/0.9 on a 5-point scale: wide gaps, so the sampled
    positive fractions stay monotone at this n.
    """
    rng = random.Random(seed)
    categories = []
    probabilities = []
    for i in range(n):
        category = 1 + i % scale_max
        rate = (2 * category - 1) / (2 * scale_max)
        if rng.random() < rate:
            p = rng.uniform(0.5, 1.0)
        else:
            p = rng.uniform(0.0, 0.4999)
        categories.append(category)
        probabilities.append(p)
    return categories, probabilities


def separable_clusters(
    n: int = 240, n_classes: int = 4, seed: int = 0, spread: float = 1.0
) -> tuple[list[dict[str, float]], list[int]]:
    """Linearly separable class clouds with one-vs-rest margin >= 1.

    Class c sits at 4*spread along axis c with coordinate noise in
    [-spread, spread]; the separator w = e_c / spread, b = -2 then gives
    decision value >= +1 inside class c and <= -1 outside.
    """
    rng = random.Random(seed)
    names = [f"f{j}" for j in range(n_classes + 2)]
    vectors = []
    targets = []
    for i in range(n):
        cls = 1 + i % n_classes
        row = {name: rng.uniform(-spread, spread) for name in names}
        row[f"f{cls - 1}"] += 4.0 * spread
        vectors.append(row)
        targets.append(cls)
    return vectors, targets


def records_with_weak_bleu(
    n: int = 400, seed: int = 0, n_classes: int = 4
) -> list[FeatureRecord]:
    """Feature records where nsp_prob separates classes and BLEU barely does.

    BLEU bands overlap heavily across adjacent categories while nsp_prob
    occupies disjoint windows, so a thresholded BLEU classifier is weak and
    the combined classifier is strong.
    """
    rng = random.Random(seed)
    records = []
    for i in range(n):
        cls = 1 + i % n_classes
        base = (cls - 1) / n_classes
        features = {name: 0.0 for name in FEATURE_NAMES}
        features["nsp_prob"] = base + rng.uniform(0.01, 1.0 / n_classes - 0.01)
        features["nsp_label"] = float(features["nsp_prob"] >= 0.5)
        features["internal_rep_1"] = max(0.0, min(1.0, 1.0 - base + rng.uniform(-0.1, 0.1)))
        features["question_balance"] = rng.random()
        features["response_length"] = float(rng.randint(2, 20))
        bleu_score = max(0.0, min(1.0, 0.3 + 0.05 * cls + rng.uniform(-0.25, 0.25)))
        records.append(
            FeatureRecord(id=str(i), target=cls, features=features, bleu=bleu_score)
        )
    return records
