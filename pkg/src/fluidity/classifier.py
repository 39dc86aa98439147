"""Linear SVM combiner over attribute features, one-vs-rest, trained from scratch.

Training is deterministic full-batch subgradient descent on the L2-regularized
hinge objective

    J(w, b) = ||w||^2 / 2 + C * sum_i s_i * max(0, 1 - y_i (w.x_i + b))

scaled by 1 / (C * sum_i s_i) so step sizes are invariant to dataset size:
duplicating every instance matches doubling C exactly, as the objective
algebra demands.  Same data, config, and seed give a bit-identical model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError, SchemaError, ValidationError
from .features import FeatureVector

MODEL_SCHEMA = "fluidity/model-v1"

# Subgradient step schedule; fixed so TrainConfig stays the reproducibility
# surface (eta_t = ETA0 / (1 + t * ETA_DECAY)).
ETA0 = 0.5
ETA_DECAY = 0.05

# Relative standard deviation below which a feature counts as constant.
ZERO_VARIANCE_RTOL = 1e-12

VectorLike = Union[FeatureVector, Mapping[str, float]]


def _as_mapping(vector: VectorLike) -> Mapping[str, float]:
    return vector.as_dict() if isinstance(vector, FeatureVector) else vector


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    epochs: int = 200
    seed: int = 0
    tolerance: float = 1e-6
    class_weighting: str = "balanced"  # "balanced" | "none"

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.tolerance < 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.class_weighting not in ("balanced", "none"):
            raise ConfigError(
                f"class_weighting must be 'balanced' or 'none', got {self.class_weighting!r}"
            )

    def echo(self) -> dict:
        return {
            "C": self.C,
            "epochs": self.epochs,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "class_weighting": self.class_weighting,
        }


@dataclass(frozen=True)
class Scaler:
    feature_names: tuple[str, ...]  # retained features, in canonical order
    means: tuple[float, ...]
    stds: tuple[float, ...]
    dropped: tuple[str, ...]  # zero-variance features excluded from training

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - np.asarray(self.means)) / np.asarray(self.stds)

    def inverse_transform(self, matrix: np.ndarray) -> np.ndarray:
        return matrix * np.asarray(self.stds) + np.asarray(self.means)


def _collect_matrix(
    vectors: Sequence[VectorLike], ids: Sequence[str] | None = None
) -> tuple[list[str], np.ndarray]:
    """Validate name consistency and NaNs, return (names, raw matrix)."""
    if not vectors:
        raise ValidationError("no feature vectors given")
    first = _as_mapping(vectors[0])
    names = list(first.keys())
    rows = np.empty((len(vectors), len(names)))
    for i, vector in enumerate(vectors):
        mapping = _as_mapping(vector)
        vid = ids[i] if ids else str(i)
        for j, name in enumerate(names):
            if name not in mapping:
                raise ValidationError(f"instance {vid}: missing feature {name!r}")
            value = float(mapping[name])
            if math.isnan(value):
                raise ValidationError(f"instance {vid}: feature {name!r} is NaN")
            rows[i, j] = value
        if len(mapping) != len(names):
            extra = sorted(set(mapping) - set(names))
            raise ValidationError(f"instance {vid}: unexpected feature {extra[0]!r}")
    return names, rows


def fit_scaler(vectors: Sequence[VectorLike]) -> Scaler:
    """Per-feature standardization (population stddev); constants get dropped."""
    if len(vectors) < 2:
        raise ValidationError(f"need at least 2 vectors to fit a scaler, got {len(vectors)}")
    names, matrix = _collect_matrix(vectors)
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)  # ddof=0
    scale = np.maximum(1.0, np.abs(means))
    keep = stds > ZERO_VARIANCE_RTOL * scale
    return Scaler(
        feature_names=tuple(n for n, k in zip(names, keep) if k),
        means=tuple(float(m) for m, k in zip(means, keep) if k),
        stds=tuple(float(s) for s, k in zip(stds, keep) if k),
        dropped=tuple(n for n, k in zip(names, keep) if not k),
    )


@dataclass(frozen=True)
class TrainedModel:
    classes: tuple[int, ...]
    feature_names: tuple[str, ...]
    weights: np.ndarray  # (n_classes, n_features), scaled space
    biases: np.ndarray  # (n_classes,)
    scaler: Scaler
    config: TrainConfig
    final_objectives: tuple[float, ...]  # normalized hinge objective per class
    # Per-epoch objective traces; kept in memory only, not serialized.
    objective_histories: tuple[tuple[float, ...], ...] = ()


def _sample_weights(y: np.ndarray, weighting: str) -> np.ndarray:
    if weighting == "none":
        return np.ones(len(y))
    n = len(y)
    n_pos = int((y > 0).sum())
    n_neg = n - n_pos
    weights = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return weights


def _train_binary(
    X: np.ndarray, y: np.ndarray, config: TrainConfig
) -> tuple[np.ndarray, float, list[float]]:
    """Subgradient descent for one one-vs-rest problem.

    Returns (w, b, per-epoch objective trace); stops early once successive
    objectives agree within the configured tolerance.
    """
    n, d = X.shape
    s = _sample_weights(y, config.class_weighting)
    S = float(s.sum())
    lam = 1.0 / (config.C * S)
    sy = s * y

    w = np.zeros(d)
    b = 0.0
    history: list[float] = []
    for t in range(config.epochs):
        margins = y * (X @ w + b)
        active = margins < 1.0
        coeff = sy * active
        grad_w = lam * w - (X.T @ coeff) / S
        grad_b = -float(coeff.sum()) / S
        eta = ETA0 / (1.0 + t * ETA_DECAY)
        w = w - eta * grad_w
        b = b - eta * grad_b

        hinge = np.maximum(0.0, 1.0 - y * (X @ w + b))
        objective = 0.5 * lam * float(w @ w) + float(s @ hinge) / S
        history.append(objective)
        if len(history) > 1 and abs(history[-2] - objective) <= config.tolerance * max(
            1.0, abs(history[-2])
        ):
            break
    return w, b, history


def train(
    vectors: Sequence[VectorLike],
    targets: Sequence[int],
    config: TrainConfig = TrainConfig(),
    ids: Sequence[str] | None = None,
) -> TrainedModel:
    """One-vs-rest linear SVMs over standardized features."""
    if len(vectors) != len(targets):
        raise ValidationError(f"{len(vectors)} vectors vs {len(targets)} targets")
    classes = tuple(sorted(set(targets)))
    if len(classes) < 2:
        raise ValidationError(f"training needs >= 2 classes, got {list(classes)}")

    names, raw = _collect_matrix(vectors, ids)  # NaN check reports instance ids
    scaler = fit_scaler(vectors)
    keep_idx = [names.index(n) for n in scaler.feature_names]
    X = scaler.transform(raw[:, keep_idx])
    t = np.asarray(targets)

    weights = np.empty((len(classes), X.shape[1]))
    biases = np.empty(len(classes))
    histories = []
    for row, cls in enumerate(classes):
        y = np.where(t == cls, 1.0, -1.0)
        w, b, history = _train_binary(X, y, config)
        weights[row] = w
        biases[row] = b
        histories.append(tuple(history))

    return TrainedModel(
        classes=classes,
        feature_names=scaler.feature_names,
        weights=weights,
        biases=biases,
        scaler=scaler,
        config=config,
        final_objectives=tuple(h[-1] for h in histories),
        objective_histories=tuple(histories),
    )


def _scaled_row(model: TrainedModel, vector: VectorLike) -> np.ndarray:
    mapping = _as_mapping(vector)
    row = np.empty(len(model.feature_names))
    for j, name in enumerate(model.feature_names):
        if name not in mapping:
            raise ValidationError(f"vector is missing feature {name!r}")
        row[j] = float(mapping[name])
    return model.scaler.transform(row)


def decision_values(model: TrainedModel, vector: VectorLike) -> np.ndarray:
    """Per-class w.x + b in ``model.classes`` order."""
    x = _scaled_row(model, vector)
    return model.weights @ x + model.biases


def predict(model: TrainedModel, vector: VectorLike) -> int:
    """Argmax class; exact ties resolve to the lower category label."""
    values = decision_values(model, vector)
    return model.classes[int(np.argmax(values))]


def predict_batch(model: TrainedModel, vectors: Sequence[VectorLike]) -> list[int]:
    return [predict(model, v) for v in vectors]


def training_accuracy(
    model: TrainedModel, vectors: Sequence[VectorLike], targets: Sequence[int]
) -> float:
    predictions = predict_batch(model, vectors)
    return sum(p == t for p, t in zip(predictions, targets)) / len(targets)


def feature_importance(model: TrainedModel) -> list[tuple[str, float]]:
    """Features ranked by mean absolute weight across classes (stable order)."""
    magnitudes = np.abs(model.weights).mean(axis=0)
    ranked = sorted(
        zip(model.feature_names, magnitudes), key=lambda pair: -pair[1]
    )
    return [(name, float(m)) for name, m in ranked]


def save_model(
    model: TrainedModel,
    path: str | Path,
    training_data_sha256: str = "",
    manifest_ref: str | None = None,
) -> None:
    document = {
        "schema": MODEL_SCHEMA,
        "manifest": manifest_ref,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "weights": [[float(v) for v in row] for row in model.weights],
        "biases": [float(v) for v in model.biases],
        "scaler": {
            "feature_names": list(model.scaler.feature_names),
            "means": list(model.scaler.means),
            "stds": list(model.scaler.stds),
            "dropped": list(model.scaler.dropped),
        },
        "config": model.config.echo(),
        "final_objectives": list(model.final_objectives),
        "training_data_sha256": training_data_sha256,
    }
    Path(path).write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e.msg}") from e
    if document.get("schema") != MODEL_SCHEMA:
        raise SchemaError(f"{path}: not a {MODEL_SCHEMA} file")
    scaler_doc = document["scaler"]
    scaler = Scaler(
        feature_names=tuple(scaler_doc["feature_names"]),
        means=tuple(scaler_doc["means"]),
        stds=tuple(scaler_doc["stds"]),
        dropped=tuple(scaler_doc["dropped"]),
    )
    config_doc = document["config"]
    return TrainedModel(
        classes=tuple(int(c) for c in document["classes"]),
        feature_names=tuple(document["feature_names"]),
        weights=np.asarray(document["weights"], dtype=float),
        biases=np.asarray(document["biases"], dtype=float),
        scaler=scaler,
        config=TrainConfig(
            C=config_doc["C"],
            epochs=config_doc["epochs"],
            seed=config_doc["seed"],
            tolerance=config_doc["tolerance"],
            class_weighting=config_doc["class_weighting"],
        ),
        final_objectives=tuple(document["final_objectives"]),
    )
