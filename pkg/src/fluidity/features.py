"""Attribute extraction: repetition, question balance, short-safe answers, NSP.

Per-instance outputs are assembled into a :class:`FeatureVector` whose fields
are each a float or an integer.  Multi-turn conversations aggregate per-turn
attribute values by arithmetic mean over agent turns (question count sums,
question balance is the ratio of question-bearing agent turns).
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import textproc
from .corpus import Conversation, Instance, SingleTurnInstance, Speaker, Utterance, category_of
from .errors import DomainError, SchemaError, ValidationError
from .nsp import NspBackend
from .textproc import Token, count_questions, has_named_entity, tokenize

REPETITION_ORDERS = (1, 2, 3)

FEATURE_FILE_SCHEMA = "fluidity/features-v1"


def _check_order(n: int) -> None:
    if n not in REPETITION_ORDERS:
        raise DomainError(f"repetition n-gram order must be one of {REPETITION_ORDERS}, got {n}")


def _grams(text: str, n: int, casefold: bool = True) -> list[tuple[str, ...]]:
    return textproc.ngrams(tokenize(text), n, casefold=casefold)


def internal_repetition(response: str, n: int, casefold: bool = True) -> float:
    """1 - distinct/total n-grams within the response; 0 when no n-grams."""
    _check_order(n)
    grams = _grams(response, n, casefold)
    if not grams:
        return 0.0
    return 1.0 - len(set(grams)) / len(grams)


def _containment(response: str, history: Sequence[str], n: int, casefold: bool) -> float:
    grams = _grams(response, n, casefold)
    if not grams:
        return 0.0
    pool: set[tuple[str, ...]] = set()
    for utterance in history:
        pool.update(_grams(utterance, n, casefold))
    return sum(g in pool for g in grams) / len(grams)


def partner_repetition(
    response: str, partner_utterances: Sequence[str], n: int, casefold: bool = True
) -> float:
    """Fraction of response n-grams echoing the conversation partner."""
    _check_order(n)
    return _containment(response, partner_utterances, n, casefold)


def external_repetition(
    response: str, prior_agent_utterances: Sequence[str], n: int, casefold: bool = True
) -> float:
    """Fraction of response n-grams the agent already said itself; 0 with no history."""
    _check_order(n)
    return _containment(response, prior_agent_utterances, n, casefold)


def question_balance(conversation: Conversation | Sequence[Utterance]) -> tuple[int, float]:
    """(total questions in agent turns, share of agent turns that ask one)."""
    turns = conversation.turns if isinstance(conversation, Conversation) else tuple(conversation)
    agent_turns = [t for t in turns if t.speaker == Speaker.AGENT]
    if not agent_turns:
        return 0, 0.0
    counts = [count_questions(t.text) for t in agent_turns]
    return sum(counts), sum(c > 0 for c in counts) / len(agent_turns)


def short_safe(
    response: str,
    length_threshold: int = 5,
    entity_detector: Callable[[Sequence[Token]], bool] | None = None,
) -> tuple[int, int, int]:
    """(token count, has-entity flag, short-safe flag).

    A response is short-safe when it is at most ``length_threshold`` tokens
    and carries no named entity: a low-risk, low-content reply.
    """
    if length_threshold < 1:
        raise DomainError(f"length_threshold must be >= 1, got {length_threshold}")
    tokens = tokenize(response)
    detector = entity_detector or has_named_entity
    entity = int(bool(detector(tokens)))
    flag = int(len(tokens) <= length_threshold and entity == 0)
    return len(tokens), entity, flag


@dataclass(frozen=True)
class FeatureConfig:
    length_threshold: int = 5
    casefold_repetition: bool = True
    entity_detector: Callable[[Sequence[Token]], bool] | None = field(
        default=None, compare=False
    )

    def __post_init__(self) -> None:
        if self.length_threshold < 1:
            raise DomainError(f"length_threshold must be >= 1, got {self.length_threshold}")

    def echo(self) -> dict:
        return {
            "length_threshold": self.length_threshold,
            "casefold_repetition": self.casefold_repetition,
            "entity_detector": "capitalization-heuristic"
            if self.entity_detector is None
            else getattr(self.entity_detector, "__name__", "custom"),
        }


@dataclass(frozen=True)
class FeatureVector:
    nsp_prob: float
    nsp_label: int
    internal_rep_1: float
    internal_rep_2: float
    internal_rep_3: float
    external_rep_1: float
    external_rep_2: float
    external_rep_3: float
    partner_rep_1: float
    partner_rep_2: float
    partner_rep_3: float
    question_count: int
    question_balance: float
    response_length: float
    has_entity: float
    short_safe: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in fields(FeatureVector))


def _as_turns(item: Instance) -> tuple[Utterance, ...]:
    if isinstance(item, SingleTurnInstance):
        return (
            Utterance(Speaker.HUMAN, item.statement, 0),
            Utterance(Speaker.AGENT, item.response, 1),
        )
    return item.turns


def scoring_pairs(item: Instance) -> list[tuple[str, str]]:
    """The (statement, response) pairs an NSP backend scores for this instance.

    One pair per agent turn; the statement is the immediately preceding
    utterance's text, or "" when the agent opens the conversation.  Score-file
    producers must cover exactly these pairs (this enumeration is part of the
    precomputed-score contract).
    """
    turns = _as_turns(item)
    pairs = []
    for i, turn in enumerate(turns):
        if turn.speaker == Speaker.AGENT:
            pairs.append((turns[i - 1].text if i > 0 else "", turn.text))
    return pairs


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _intify(value: float) -> float:
    return int(value) if float(value).is_integer() else value


def extract_features(
    item: Instance,
    backend: NspBackend,
    config: FeatureConfig = FeatureConfig(),
    _lock: threading.Lock | None = None,
) -> FeatureVector:
    """Compute the full attribute vector for one instance.

    NSP backend failures abort the instance (the raised error names it);
    scores are never silently defaulted.
    """
    turns = _as_turns(item)
    pairs = scoring_pairs(item)
    item_id = item.id

    try:
        if _lock is not None:
            with _lock:
                nsp_results = backend.score_batch(pairs)
        else:
            nsp_results = backend.score_batch(pairs)
    except Exception as e:
        raise type(e)(f"instance {item_id}: {e}") from e

    casefold = config.casefold_repetition
    internal: dict[int, list[float]] = {n: [] for n in REPETITION_ORDERS}
    external: dict[int, list[float]] = {n: [] for n in REPETITION_ORDERS}
    partner: dict[int, list[float]] = {n: [] for n in REPETITION_ORDERS}
    lengths: list[int] = []
    entities: list[int] = []
    short_flags: list[int] = []

    for i, turn in enumerate(turns):
        if turn.speaker != Speaker.AGENT:
            continue
        partner_history = [t.text for t in turns[:i] if t.speaker == Speaker.HUMAN]
        agent_history = [t.text for t in turns[:i] if t.speaker == Speaker.AGENT]
        for n in REPETITION_ORDERS:
            internal[n].append(internal_repetition(turn.text, n, casefold))
            external[n].append(external_repetition(turn.text, agent_history, n, casefold))
            partner[n].append(partner_repetition(turn.text, partner_history, n, casefold))
        length, entity, flag = short_safe(
            turn.text, config.length_threshold, config.entity_detector
        )
        lengths.append(length)
        entities.append(entity)
        short_flags.append(flag)

    q_count, q_balance = question_balance(turns)
    nsp_prob = _mean([r.probability for r in nsp_results])
    nsp_label = int(nsp_prob >= backend.threshold)

    return FeatureVector(
        nsp_prob=nsp_prob,
        nsp_label=nsp_label,
        internal_rep_1=_mean(internal[1]),
        internal_rep_2=_mean(internal[2]),
        internal_rep_3=_mean(internal[3]),
        external_rep_1=_mean(external[1]),
        external_rep_2=_mean(external[2]),
        external_rep_3=_mean(external[3]),
        partner_rep_1=_mean(partner[1]),
        partner_rep_2=_mean(partner[2]),
        partner_rep_3=_mean(partner[3]),
        question_count=q_count,
        question_balance=q_balance,
        response_length=_intify(_mean(lengths)),
        has_entity=_intify(_mean(entities)),
        short_safe=_intify(_mean(short_flags)),
    )


@dataclass(frozen=True)
class FeatureRecord:
    id: str
    target: int
    features: dict[str, float]
    bleu: float | None = None


def extract_dataset(
    items: Sequence[Instance],
    backend: NspBackend,
    config: FeatureConfig = FeatureConfig(),
    workers: int = 1,
    bleu_scorer: Callable[[Instance], float] | None = None,
    progress: Callable[[int], None] | None = None,
) -> list[FeatureRecord]:
    """Extract features for every instance, in input order.

    Extraction parallelizes across instances when ``workers`` > 1; a backend
    that is not concurrent-safe has its calls serialized behind a lock.
    """
    lock = None if backend.concurrent_safe else threading.Lock()

    def one(item: Instance) -> FeatureRecord:
        vector = extract_features(item, backend, config, _lock=lock)
        return FeatureRecord(
            id=item.id,
            target=category_of(item),
            features=vector.as_dict(),
            bleu=bleu_scorer(item) if bleu_scorer else None,
        )

    if workers <= 1 or len(items) <= 1:
        records = []
        for count, item in enumerate(items, start=1):
            records.append(one(item))
            if progress and count % 100 == 0:
                progress(count)
        return records

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = []
        for count, record in enumerate(pool.map(one, items), start=1):
            records.append(record)
            if progress and count % 100 == 0:
                progress(count)
        return records


def write_feature_file(
    path: str | Path,
    records: Sequence[FeatureRecord],
    kind: str,
    config: FeatureConfig,
    extra_header: dict | None = None,
) -> None:
    """Line-delimited feature records behind a provenance header."""
    header: dict = {
        "schema": FEATURE_FILE_SCHEMA,
        "kind": kind,
        "feature_names": list(FEATURE_NAMES),
        "config": config.echo(),
    }
    if extra_header:
        header.update(extra_header)
    lines = [json.dumps(header, ensure_ascii=False)]
    for record in records:
        body: dict = {"id": record.id, "target": record.target, "features": record.features}
        if record.bleu is not None:
            body["bleu"] = record.bleu
        lines.append(json.dumps(body, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_feature_file(path: str | Path) -> tuple[dict, list[FeatureRecord]]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}:1: invalid JSON header: {e.msg}") from e
        if not isinstance(header, dict) or header.get("schema") != FEATURE_FILE_SCHEMA:
            raise SchemaError(f"{path}: not a {FEATURE_FILE_SCHEMA} file")
        records = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                body = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {e.msg}") from e
            for field_name in ("id", "target", "features"):
                if field_name not in body:
                    raise SchemaError(f"{path}:{line_no}: missing field {field_name!r}")
            features = body["features"]
            for name, value in features.items():
                if not isinstance(value, (int, float)):
                    raise ValidationError(
                        f"{path}:{line_no}: feature {name!r} is not a number"
                    )
            records.append(
                FeatureRecord(
                    id=str(body["id"]),
                    target=int(body["target"]),
                    features={k: float(v) for k, v in features.items()},
                    bleu=float(body["bleu"]) if "bleu" in body else None,
                )
            )
    return header, records


def feature_matrix(records: Iterable[FeatureRecord]) -> tuple[list[dict[str, float]], list[int], list[str]]:
    """Split records into (feature dicts, targets, ids) for training."""
    vectors, targets, ids = [], [], []
    for record in records:
        vectors.append(record.features)
        targets.append(record.target)
        ids.append(record.id)
    return vectors, targets, ids
