"""Statistical reporting: per-feature correlations, F1 scores, category
histograms of NSP predictions, and the combined-vs-baseline comparison.

Reports render as markdown and JSON with identical content, plus a
plot-ready CSV for the per-category prediction histogram.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DomainError, UndefinedCorrelationError, ValidationError

REPORT_SCHEMA = "fluidity/report-v1"

# Deltas smaller than this count as "no change" between two classifiers.
NO_CHANGE_EPSILON = 0.005


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; undefined (raises) on zero variance."""
    if len(x) != len(y):
        raise ValidationError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValidationError(f"need at least 2 points, got {len(x)}")
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance on one side; correlation undefined")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_or_none(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Correlation, or None where it is undefined (reported as "n/a")."""
    try:
        return pearson(x, y)
    except UndefinedCorrelationError:
        return None


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class F1Report:
    per_class: dict[int, ClassScores]
    macro_f1: float
    micro_f1: float


def f1_scores(predicted: Sequence[int], gold: Sequence[int]) -> F1Report:
    """Per-class precision/recall/F1 plus macro (over classes present in gold).

    F1 is 0 whenever precision + recall is 0.  Micro-F1 (= accuracy in
    single-label classification) is included for completeness.
    """
    if len(predicted) != len(gold):
        raise ValidationError(f"length mismatch: {len(predicted)} vs {len(gold)}")
    if not gold:
        raise ValidationError("need at least 1 pair")
    classes = sorted(set(gold))
    per_class = {}
    for cls in classes:
        tp = sum(p == cls and g == cls for p, g in zip(predicted, gold))
        pred_count = sum(p == cls for p in predicted)
        gold_count = sum(g == cls for g in gold)
        precision = tp / pred_count if pred_count else 0.0
        recall = tp / gold_count if gold_count else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = ClassScores(precision, recall, f1, gold_count)
    macro = sum(s.f1 for s in per_class.values()) / len(classes)
    micro = sum(p == g for p, g in zip(predicted, gold)) / len(gold)
    return F1Report(per_class=per_class, macro_f1=macro, micro_f1=micro)


@dataclass(frozen=True)
class HistogramRow:
    category: int
    positive_fraction: float | None  # None marks an absent category
    negative_fraction: float | None
    count: int


def category_histogram(
    categories: Sequence[int],
    nsp_labels: Sequence[int],
    scale_max: int | None = None,
) -> list[HistogramRow]:
    """Per rating category: fraction of positive/negative NSP predictions.

    Categories 1..scale_max are all emitted; zero-count rows carry None
    fractions rather than fabricated zeros.
    """
    if len(categories) != len(nsp_labels):
        raise ValidationError(f"length mismatch: {len(categories)} vs {len(nsp_labels)}")
    if scale_max is None:
        scale_max = max(categories, default=0)
    totals = {c: 0 for c in range(1, scale_max + 1)}
    positives = {c: 0 for c in range(1, scale_max + 1)}
    for category, label in zip(categories, nsp_labels):
        if category not in totals:
            raise DomainError(f"category {category} outside [1, {scale_max}]")
        totals[category] += 1
        positives[category] += int(label == 1)
    rows = []
    for category in range(1, scale_max + 1):
        count = totals[category]
        if count:
            positive = positives[category] / count
            rows.append(HistogramRow(category, positive, 1.0 - positive, count))
        else:
            rows.append(HistogramRow(category, None, None, 0))
    return rows


@dataclass(frozen=True)
class Comparison:
    combined_macro_f1: float
    baseline_macro_f1: float
    absolute_delta: float
    relative_delta: float | None  # None when the baseline is 0
    no_change: bool


def comparison_report(combined_f1: float, baseline_f1: float) -> Comparison:
    """Absolute and relative deltas between combined metric and BLEU baseline."""
    for name, value in (("combined_f1", combined_f1), ("baseline_f1", baseline_f1)):
        if not 0 <= value <= 1:
            raise DomainError(f"{name} {value} outside [0, 1]")
    delta = combined_f1 - baseline_f1
    relative = delta / baseline_f1 if baseline_f1 > 0 else None
    return Comparison(
        combined_macro_f1=combined_f1,
        baseline_macro_f1=baseline_f1,
        absolute_delta=delta,
        relative_delta=relative,
        no_change=abs(delta) < NO_CHANGE_EPSILON,
    )


@dataclass(frozen=True)
class EvaluationReport:
    dataset_kind: str
    n_instances: int
    feature_correlations: dict[str, float | None]
    f1: F1Report
    histogram: list[HistogramRow]
    comparison: Comparison | None
    config_echo: dict
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "dataset_kind": self.dataset_kind,
            "n_instances": self.n_instances,
            "feature_correlations": {
                name: value for name, value in self.feature_correlations.items()
            },
            "per_class": {
                str(cls): {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for cls, s in sorted(self.f1.per_class.items())
            },
            "macro_f1": self.f1.macro_f1,
            "micro_f1": self.f1.micro_f1,
            "histogram": [
                {
                    "category": row.category,
                    "positive_fraction": row.positive_fraction,
                    "negative_fraction": row.negative_fraction,
                    "count": row.count,
                }
                for row in self.histogram
            ],
            "baseline_comparison": None
            if self.comparison is None
            else {
                "combined_macro_f1": self.comparison.combined_macro_f1,
                "baseline_macro_f1": self.comparison.baseline_macro_f1,
                "absolute_delta": self.comparison.absolute_delta,
                "relative_delta": self.comparison.relative_delta,
                "no_change": self.comparison.no_change,
            },
            "config": self.config_echo,
            "notes": list(self.notes),
        }

    def to_markdown(self) -> str:
        def fmt(value: float | None, digits: int = 4) -> str:
            return "n/a" if value is None else f"{value:.{digits}f}"

        lines = [
            "# Evaluation report",
            "",
            f"- dataset kind: {self.dataset_kind}",
            f"- instances: {self.n_instances}",
            f"- macro-F1: {fmt(self.f1.macro_f1)}",
            f"- micro-F1: {fmt(self.f1.micro_f1)}",
            "",
            "## Per-class scores",
            "",
            "| class | precision | recall | F1 | support |",
            "|------:|----------:|-------:|---:|--------:|",
        ]
        for cls, s in sorted(self.f1.per_class.items()):
            lines.append(
                f"| {cls} | {fmt(s.precision)} | {fmt(s.recall)} | {fmt(s.f1)} | {s.support} |"
            )
        lines += [
            "",
            "## Feature correlations with human ratings",
            "",
            "| feature | pearson r |",
            "|---------|----------:|",
        ]
        for name, value in self.feature_correlations.items():
            lines.append(f"| {name} | {fmt(value)} |")
        lines += [
            "",
            "## NSP predictions per rating category",
            "",
            "| category | positive | negative | count |",
            "|---------:|---------:|---------:|------:|",
        ]
        for row in self.histogram:
            lines.append(
                f"| {row.category} | {fmt(row.positive_fraction)} |"
                f" {fmt(row.negative_fraction)} | {row.count} |"
            )
        if self.comparison is not None:
            c = self.comparison
            relative = "n/a" if c.relative_delta is None else f"{c.relative_delta:+.2%}"
            lines += [
                "",
                "## Baseline comparison",
                "",
                f"- combined macro-F1: {c.combined_macro_f1:.4f}",
                f"- BLEU-threshold baseline macro-F1: {c.baseline_macro_f1:.4f}",
                f"- absolute delta: {c.absolute_delta:+.4f}",
                f"- relative delta: {relative}",
                f"- verdict: {'no change' if c.no_change else ('improvement' if c.absolute_delta > 0 else 'regression')}",
            ]
        if self.notes:
            lines += ["", "## Notes", ""]
            lines += [f"- {note}" for note in self.notes]
        lines += ["", "## Configuration", "", "```json",
                  json.dumps(self.config_echo, indent=2, sort_keys=True), "```", ""]
        return "\n".join(lines)

    def histogram_csv(self) -> str:
        lines = ["category,positive_fraction,negative_fraction,count"]
        for row in self.histogram:
            positive = "" if row.positive_fraction is None else repr(row.positive_fraction)
            negative = "" if row.negative_fraction is None else repr(row.negative_fraction)
            lines.append(f"{row.category},{positive},{negative},{row.count}")
        return "\n".join(lines) + "\n"


def feature_correlations(
    feature_rows: Sequence[Mapping[str, float]], targets: Sequence[float]
) -> dict[str, float | None]:
    """Pearson r of every feature column against the human-rating target."""
    if not feature_rows:
        return {}
    names = list(feature_rows[0].keys())
    return {
        name: pearson_or_none([row[name] for row in feature_rows], list(targets))
        for name in names
    }
