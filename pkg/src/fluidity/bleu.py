"""Sentence-level BLEU with clipped n-gram precision and a brevity penalty.

Used as the comparison baseline: a continuous BLEU score is turned into a
rating category through ascending thresholds fitted on training data by
maximizing macro-F1 over a 0.01 grid.

The variant is BLEU-4, uniform weights, no smoothing by default; all three
knobs are configurable and echoed into reports.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from . import textproc
from .corpus import Instance
from .errors import ConfigError, DomainError, ValidationError
from .features import scoring_pairs
from .textproc import tokenize

THRESHOLD_GRID_STEP = 0.01


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    weights: tuple[float, ...] | None = None  # None -> uniform over max_n orders
    smoothing: str = "none"  # "none" | "add-k"
    k: float = 1.0

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ConfigError(f"max_n must be >= 1, got {self.max_n}")
        if self.smoothing not in ("none", "add-k"):
            raise ConfigError(f"smoothing must be 'none' or 'add-k', got {self.smoothing!r}")
        if self.smoothing == "add-k" and self.k <= 0:
            raise ConfigError(f"add-k smoothing needs k > 0, got {self.k}")
        if self.weights is not None:
            if len(self.weights) != self.max_n:
                raise ConfigError(
                    f"{len(self.weights)} weights for max_n={self.max_n}"
                )
            if any(w < 0 for w in self.weights):
                raise ConfigError("weights must be non-negative")
            if abs(math.fsum(self.weights) - 1.0) > 1e-9:
                raise ConfigError(f"weights must sum to 1, got {math.fsum(self.weights)}")

    def resolved_weights(self) -> tuple[float, ...]:
        if self.weights is not None:
            return tuple(self.weights)
        return tuple(1.0 / self.max_n for _ in range(self.max_n))

    def echo(self) -> dict:
        return {
            "max_n": self.max_n,
            "weights": list(self.resolved_weights()),
            "smoothing": self.smoothing if self.smoothing == "none" else f"add-k(k={self.k})",
        }


def modified_precision(
    candidate: str, references: Sequence[str], n: int
) -> tuple[int, int]:
    """(clipped matches, total) candidate n-grams against reference maxima."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not references:
        raise ValidationError("modified_precision needs at least one reference")
    counts = Counter(textproc.ngrams(tokenize(candidate), n))
    total = sum(counts.values())
    if total == 0:
        return 0, 0
    max_ref: Counter = Counter()
    for reference in references:
        ref_counts = Counter(textproc.ngrams(tokenize(reference), n))
        for gram, c in ref_counts.items():
            if c > max_ref[gram]:
                max_ref[gram] = c
    clipped = sum(min(c, max_ref[gram]) for gram, c in counts.items())
    return clipped, total


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    if reference_len < 1:
        raise DomainError(f"reference_len must be >= 1, got {reference_len}")
    if candidate_len == 0:
        return 0.0
    if candidate_len >= reference_len:
        return 1.0
    return math.exp(1.0 - reference_len / candidate_len)


def bleu(candidate: str, references: Sequence[str], config: BleuConfig = BleuConfig()) -> float:
    """Sentence BLEU in [0, 1]; exactly 1.0 when candidate equals a reference.

    Candidates shorter than max_n use only the orders they can produce, with
    weights renormalized over those orders (so identity stays 1 for any
    non-empty text).  Zero matches at any used order give 0 under smoothing
    "none"; add-k smoothing rescues zero matches.
    """
    if not references:
        raise ValidationError("bleu needs at least one reference")
    weights = config.resolved_weights()
    candidate_len = len(tokenize(candidate))
    if candidate_len == 0:
        return 0.0

    effective = min(config.max_n, candidate_len)
    weight_sum = math.fsum(weights[:effective])
    if weight_sum == 0.0:
        return 0.0

    log_sum = []
    for n in range(1, effective + 1):
        weight = weights[n - 1] / weight_sum
        clipped, total = modified_precision(candidate, references, n)
        if config.smoothing == "add-k":
            p = (clipped + config.k) / (total + config.k)
        else:
            if clipped == 0:
                return 0.0
            p = clipped / total
        log_sum.append(weight * math.log(p))

    ref_lens = [len(tokenize(r)) for r in references]
    # Effective reference length: closest to the candidate, ties to shorter.
    ref_len = min(ref_lens, key=lambda L: (abs(L - candidate_len), L))
    if ref_len == 0:
        return 0.0
    return brevity_penalty(candidate_len, ref_len) * math.exp(math.fsum(log_sum))


def instance_bleu(item: Instance, config: BleuConfig = BleuConfig()) -> float:
    """Per-instance baseline score.

    Single-turn: the response scored against the statement it answers.
    Multi-turn: mean over agent turns of each turn scored against the
    utterance it follows (the same pairing NSP uses); pairs with an empty
    preceding utterance are skipped, and a fully skipped instance scores 0.
    """
    scores = []
    for statement, response in scoring_pairs(item):
        if not statement.strip():
            continue
        scores.append(bleu(response, [statement], config))
    return sum(scores) / len(scores) if scores else 0.0


def classify_score(score: float, thresholds: Sequence[float]) -> int:
    """Category = 1 + number of thresholds at or below the score."""
    _check_thresholds(thresholds)
    return 1 + sum(t <= score for t in thresholds)


def bleu_baseline_classify(
    candidate: str,
    reference: str,
    thresholds: Sequence[float],
    config: BleuConfig = BleuConfig(),
) -> int:
    return classify_score(bleu(candidate, [reference], config), thresholds)


def _check_thresholds(thresholds: Sequence[float]) -> None:
    if any(not 0 < t < 1 for t in thresholds):
        raise ConfigError(f"thresholds must lie in (0, 1): {list(thresholds)}")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ConfigError(f"thresholds must be strictly ascending: {list(thresholds)}")


def fit_thresholds(
    scores: Sequence[float],
    golds: Sequence[int],
    n_categories: int | None = None,
    step: float = THRESHOLD_GRID_STEP,
) -> list[float]:
    """Fit ascending score thresholds maximizing macro-F1 on a 0.01 grid.

    Exact grid optimum via dynamic programming: predicted class c covers the
    score segment between adjacent thresholds, and class F1 = 2*TP/(pred+gold)
    depends only on that segment, so macro-F1 decomposes over consecutive
    boundary pairs.  Ties break toward lower threshold values.
    """
    if len(scores) != len(golds):
        raise ValidationError(f"{len(scores)} scores vs {len(golds)} golds")
    if not scores:
        raise ValidationError("cannot fit thresholds on an empty set")
    if n_categories is None:
        n_categories = max(golds)
    if n_categories < 2:
        raise ConfigError(f"need at least 2 categories, got {n_categories}")

    grid = [round(i * step, 10) for i in range(1, round(1.0 / step))]
    n_grid = len(grid)
    classes = list(range(1, n_categories + 1))
    gold_count = {c: 0 for c in classes}
    for g in golds:
        if g in gold_count:
            gold_count[g] += 1

    # cum[c][j] = number of class-c scores strictly below boundary j, where
    # boundary 0 = -inf, boundaries 1..n_grid = grid values, n_grid+1 = +inf.
    boundaries = [float("-inf")] + grid + [float("inf")]
    sorted_pairs = sorted(zip(scores, golds), key=lambda p: p[0])
    total_cum = [0] * len(boundaries)
    cum = {c: [0] * len(boundaries) for c in classes}
    running = {c: 0 for c in classes}
    idx = 0
    for j, b in enumerate(boundaries):
        while idx < len(sorted_pairs) and sorted_pairs[idx][0] < b:
            g = sorted_pairs[idx][1]
            if g in running:
                running[g] += 1
            idx += 1
        total_cum[j] = idx
        for c in classes:
            cum[c][j] = running[c]

    def class_f1(c: int, lo: int, hi: int) -> float:
        tp = cum[c][hi] - cum[c][lo]
        pred = total_cum[hi] - total_cum[lo]
        denom = pred + gold_count[c]
        return 2.0 * tp / denom if denom else 0.0

    # best[b] = max sum of class F1 over classes 1..layer with the layer-th
    # threshold at boundary index b.
    n_thresholds = n_categories - 1
    best = [class_f1(1, 0, b) for b in range(n_grid + 1)]  # b in 1..n_grid used
    parent: list[list[int]] = []
    for layer in range(2, n_thresholds + 1):
        new_best = [float("-inf")] * (n_grid + 1)
        layer_parent = [0] * (n_grid + 1)
        for b in range(layer, n_grid + 1):
            choice = float("-inf")
            arg = 0
            for prev in range(layer - 1, b):
                value = best[prev] + class_f1(layer, prev, b)
                if value > choice:
                    choice = value
                    arg = prev
            new_best[b] = choice
            layer_parent[b] = arg
        best = new_best
        parent.append(layer_parent)

    final_best = float("-inf")
    final_arg = n_thresholds
    for b in range(n_thresholds, n_grid + 1):
        value = best[b] + class_f1(n_categories, b, n_grid + 1)
        if value > final_best:
            final_best = value
            final_arg = b

    chosen = [final_arg]
    for layer_parent in reversed(parent):
        chosen.append(layer_parent[chosen[-1]])
    chosen.reverse()
    return [grid[b - 1] for b in chosen]
