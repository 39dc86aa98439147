"""Data model and ingestion for single-turn pairs and multi-turn conversations.

Loaded datasets are immutable (frozen dataclasses, tuples) and safe to share
across threads.  The normalized JSONL cache written by :func:`save_dataset`
round-trips losslessly through :func:`load_dataset`.
"""

from __future__ import annotations

import csv
import json
import math
import random
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar, Union

from .errors import DomainError, SchemaError, ValidationError

SINGLE_TURN_SCALE = 5
MULTI_TURN_SCALE = 4

SINGLE_TURN_COLUMNS = ("Statement", "Response", "AMT1", "AMT2", "AMT3", "AMT4", "AMT5", "Mean")

# File's Mean column stores one decimal place, so recomputed means may differ
# by up to half a unit in the last place.
MEAN_COLUMN_TOLERANCE = 0.05


class Speaker(str, Enum):
    HUMAN = "human"
    AGENT = "agent"


@dataclass(frozen=True)
class SingleTurnInstance:
    id: str
    statement: str
    response: str
    ratings: tuple[int, ...]
    mean_rating: float

    def __post_init__(self) -> None:
        if len(self.ratings) != 5:
            raise ValidationError(
                f"instance {self.id}: expected 5 ratings, got {len(self.ratings)}"
            )
        for r in self.ratings:
            if not 1 <= r <= SINGLE_TURN_SCALE:
                raise ValidationError(f"instance {self.id}: rating {r} outside [1, 5]")
        if abs(self.mean_rating - sum(self.ratings) / 5) > 1e-9:
            raise ValidationError(
                f"instance {self.id}: mean_rating {self.mean_rating} does not equal "
                f"the mean of {self.ratings}"
            )

    @classmethod
    def from_ratings(
        cls, id: str, statement: str, response: str, ratings: Iterable[int]
    ) -> "SingleTurnInstance":
        ratings = tuple(int(r) for r in ratings)
        return cls(id, statement, response, ratings, sum(ratings) / len(ratings))


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    index: int


@dataclass(frozen=True)
class Conversation:
    id: str
    turns: tuple[Utterance, ...]
    score: int

    def __post_init__(self) -> None:
        if not self.turns:
            raise ValidationError(f"conversation {self.id}: empty turn list")
        if not 1 <= self.score <= MULTI_TURN_SCALE:
            raise ValidationError(
                f"conversation {self.id}: score {self.score} outside [1, {MULTI_TURN_SCALE}]"
            )
        for expected, turn in enumerate(self.turns):
            if turn.index != expected:
                raise ValidationError(
                    f"conversation {self.id}: turn index {turn.index} out of order"
                )


Instance = Union[SingleTurnInstance, Conversation]
_T = TypeVar("_T")


def bin_rating(mean: float, scale_max: int) -> int:
    """Floor the mean rating into its integer category, e.g. 2.3 -> 2."""
    if math.isnan(mean) or not 1 <= mean <= scale_max:
        raise DomainError(f"mean {mean} outside [1, {scale_max}]")
    return min(math.floor(mean), scale_max)


def category_of(item: Instance) -> int:
    """Classification target: binned mean for single-turn, given score for multi-turn."""
    if isinstance(item, SingleTurnInstance):
        return bin_rating(item.mean_rating, SINGLE_TURN_SCALE)
    return item.score


def scale_of(item: Instance) -> int:
    return SINGLE_TURN_SCALE if isinstance(item, SingleTurnInstance) else MULTI_TURN_SCALE


def load_single_turn(path: str | Path) -> list[SingleTurnInstance]:
    """Parse the published single-turn CSV schema.

    The Mean column, when present, is cross-checked against the recomputed
    mean within 0.05; the recomputed value is what the instance stores.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        required = [c for c in SINGLE_TURN_COLUMNS if c != "Mean"]
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        unknown = [c for c in header if c not in SINGLE_TURN_COLUMNS]
        if unknown:
            raise SchemaError(f"{path}: unknown column {unknown[0]!r}")
        col = {name: header.index(name) for name in header}
        has_mean = "Mean" in col

        instances: list[SingleTurnInstance] = []
        for ordinal, row in enumerate(reader):
            if not any(cell.strip() for cell in row):
                continue
            row_no = ordinal + 1
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: data row {row_no} has {len(row)} fields, expected {len(header)}"
                )
            ratings = []
            for i in range(1, 6):
                raw = row[col[f"AMT{i}"]].strip()
                try:
                    value = int(raw)
                except ValueError:
                    raise ValidationError(
                        f"{path}: data row {row_no}: rating AMT{i}={raw!r} is not an integer"
                    ) from None
                if not 1 <= value <= SINGLE_TURN_SCALE:
                    raise ValidationError(
                        f"{path}: data row {row_no}: rating AMT{i}={value} outside [1, 5]"
                    )
                ratings.append(value)
            mean = sum(ratings) / 5
            if has_mean:
                raw_mean = row[col["Mean"]].strip()
                try:
                    file_mean = float(raw_mean)
                except ValueError:
                    raise ValidationError(
                        f"{path}: data row {row_no}: Mean={raw_mean!r} is not a number"
                    ) from None
                if abs(file_mean - mean) > MEAN_COLUMN_TOLERANCE + 1e-9:
                    raise ValidationError(
                        f"{path}: data row {row_no}: Mean column {file_mean} disagrees with "
                        f"recomputed mean {mean:.2f} beyond {MEAN_COLUMN_TOLERANCE}"
                    )
            instances.append(
                SingleTurnInstance(
                    id=str(ordinal),
                    statement=row[col["Statement"]],
                    response=row[col["Response"]],
                    ratings=tuple(ratings),
                    mean_rating=mean,
                )
            )
    return instances


def load_multi_turn(path: str | Path) -> list[Conversation]:
    """Parse line-delimited conversation records (id, score, turns)."""
    path = Path(path)
    conversations: list[Conversation] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {e.msg}") from e
            conversations.append(_conversation_from_record(record, f"{path}:{line_no}"))
    return conversations


def _conversation_from_record(record: dict, where: str) -> Conversation:
    if not isinstance(record, dict) or "turns" not in record or "score" not in record:
        raise SchemaError(f"{where}: record must carry 'score' and 'turns'")
    raw_turns = record["turns"]
    if not isinstance(raw_turns, list) or not raw_turns:
        raise ValidationError(f"{where}: empty turn list")
    try:
        score = int(record["score"])
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: score {record['score']!r} is not an integer") from None
    if not 1 <= score <= MULTI_TURN_SCALE:
        raise ValidationError(f"{where}: score {score} outside [1, {MULTI_TURN_SCALE}]")
    turns = []
    for index, t in enumerate(raw_turns):
        try:
            speaker = Speaker(t["speaker"])
        except (KeyError, ValueError, TypeError):
            raise ValidationError(
                f"{where}: turn {index} speaker must be 'human' or 'agent'"
            ) from None
        text = t.get("text")
        if not isinstance(text, str):
            raise ValidationError(f"{where}: turn {index} has no text")
        turns.append(Utterance(speaker=speaker, text=text, index=index))
    conv_id = str(record.get("id", where))
    return Conversation(id=conv_id, turns=tuple(turns), score=score)


DATASET_SCHEMA = "fluidity/dataset-v1"


def save_dataset(items: Sequence[Instance], path: str | Path, manifest: str | None = None) -> None:
    """Re-emit a dataset in normalized line-delimited form (lossless)."""
    if not items:
        raise ValidationError("refusing to write an empty dataset")
    kind = "single" if isinstance(items[0], SingleTurnInstance) else "multi"
    header: dict = {"schema": DATASET_SCHEMA, "kind": kind}
    if manifest:
        header["manifest"] = manifest
    lines = [json.dumps(header, ensure_ascii=False)]
    for item in items:
        if kind == "single":
            assert isinstance(item, SingleTurnInstance)
            record = {
                "id": item.id,
                "statement": item.statement,
                "response": item.response,
                "ratings": list(item.ratings),
                "mean_rating": item.mean_rating,
            }
        else:
            assert isinstance(item, Conversation)
            record = {
                "id": item.id,
                "score": item.score,
                "turns": [{"speaker": t.speaker.value, "text": t.text} for t in item.turns],
            }
        lines.append(json.dumps(record, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path: str | Path) -> tuple[str, list[Instance]]:
    """Read a normalized dataset cache; returns (kind, items)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}:1: invalid JSON header: {e.msg}") from e
        if not isinstance(header, dict) or header.get("schema") != DATASET_SCHEMA:
            raise SchemaError(f"{path}: not a {DATASET_SCHEMA} file")
        kind = header.get("kind")
        if kind not in ("single", "multi"):
            raise SchemaError(f"{path}: unknown dataset kind {kind!r}")
        items: list[Instance] = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {e.msg}") from e
            if kind == "single":
                items.append(
                    SingleTurnInstance(
                        id=str(record["id"]),
                        statement=record["statement"],
                        response=record["response"],
                        ratings=tuple(int(r) for r in record["ratings"]),
                        mean_rating=float(record["mean_rating"]),
                    )
                )
            else:
                items.append(_conversation_from_record(record, f"{path}:{line_no}"))
    return kind, items


def split(
    items: Sequence[_T],
    test_fraction: float,
    seed: int,
    category: Callable[[_T], int] | None = None,
) -> tuple[list[_T], list[_T]]:
    """Deterministic train/test partition, stratified by rating category.

    Stratification requires every category to have at least 2 members;
    otherwise the split falls back to unstratified with a warning.
    """
    if not 0 < test_fraction < 1:
        raise DomainError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if len(items) < 2:
        raise ValidationError(f"need at least 2 instances to split, got {len(items)}")
    if category is None:
        category = category_of  # type: ignore[assignment]

    rng = random.Random(seed)
    groups: dict[int, list[int]] = {}
    for index, item in enumerate(items):
        groups.setdefault(category(item), []).append(index)

    stratified = all(len(g) >= 2 for g in groups.values())
    if not stratified:
        warnings.warn(
            "some rating category has fewer than 2 members; splitting unstratified",
            stacklevel=2,
        )
        groups = {0: list(range(len(items)))}

    # Largest-remainder apportionment keeps the overall test count at
    # round(test_fraction * n) while each category contributes its share.
    n = len(items)
    total_test = round(test_fraction * n)
    quotas = {cat: total_test * len(g) / n for cat, g in groups.items()}
    allocation = {cat: math.floor(q) for cat, q in quotas.items()}
    remainder = total_test - sum(allocation.values())
    by_fraction = sorted(
        groups,
        key=lambda cat: (-(quotas[cat] - allocation[cat]), -len(groups[cat]), cat),
    )
    for cat in by_fraction[:remainder]:
        allocation[cat] += 1

    test_indices: set[int] = set()
    for cat in sorted(groups):
        indices = list(groups[cat])
        rng.shuffle(indices)
        test_indices.update(indices[: allocation[cat]])

    train = [items[i] for i in range(len(items)) if i not in test_indices]
    test = [items[i] for i in range(len(items)) if i in test_indices]
    return train, test
