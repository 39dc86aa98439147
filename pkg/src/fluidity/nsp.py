"""Next-sentence-prediction scoring behind one uniform client interface.

Three interchangeable backends: a fixed stub (lets the suite run with no
model), a precomputed-score file, and a remote HTTP scorer speaking the
``POST /v1/nsp`` protocol.  Failures are never converted into default scores.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import requests

from .errors import (
    ConfigError,
    MissingScoreError,
    ProtocolError,
    SchemaError,
    TransportError,
    ValidationError,
)

DEFAULT_THRESHOLD = 0.5
SCORE_FILE_SCHEMA = "fluidity/nsp-scores-v1"

Pair = tuple[str, str]


@dataclass(frozen=True)
class NspResult:
    probability: float
    is_next: int


def canonical_text(text: str) -> str:
    """Whitespace-canonical form used for pair keys: runs collapse to one space."""
    return " ".join(text.split())


def pair_key(statement: str, response: str) -> str:
    """Content hash identifying a (statement, response) pair in score files.

    sha256 over ``canonical_text(statement) + "\\n" + canonical_text(response)``
    encoded as UTF-8.  Canonicalization makes keys survive benign reformatting.
    Any producer of score files must replicate this rule bit-exactly.
    """
    payload = canonical_text(statement) + "\n" + canonical_text(response)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class NspBackendConfig:
    kind: str  # "file" | "remote" | "stub"
    location: str | None = None
    threshold: float = DEFAULT_THRESHOLD
    timeout: float = 10.0
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("file", "remote", "stub"):
            raise ConfigError(f"unknown NSP backend kind {self.kind!r}")
        if self.kind in ("file", "remote") and not self.location:
            raise ConfigError(f"NSP backend kind {self.kind!r} requires a location")
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_in_flight < 1:
            raise ConfigError(f"max_in_flight must be >= 1, got {self.max_in_flight}")


class NspBackend:
    """Interface shared by all backends."""

    threshold: float = DEFAULT_THRESHOLD
    # Backends that cannot take concurrent score() calls set this False and
    # the feature extractor serializes access.
    concurrent_safe: bool = True

    def score(self, statement: str, response: str) -> NspResult:
        raise NotImplementedError

    def score_batch(self, pairs: Sequence[Pair]) -> list[NspResult]:
        results = []
        for index, (statement, response) in enumerate(pairs):
            try:
                results.append(self.score(statement, response))
            except Exception as e:
                raise type(e)(f"batch element {index}: {e}") from e
        return results

    def _result(self, probability: float) -> NspResult:
        return NspResult(probability, int(probability >= self.threshold))


class StubBackend(NspBackend):
    """Deterministic fixed-probability scorer (default 0.5)."""

    def __init__(self, probability: float = 0.5, threshold: float = DEFAULT_THRESHOLD):
        if not 0 <= probability <= 1:
            raise ConfigError(f"stub probability {probability} outside [0, 1]")
        self.probability = probability
        self.threshold = threshold

    def score(self, statement: str, response: str) -> NspResult:
        return self._result(self.probability)


class FileBackend(NspBackend):
    """Serves exact probabilities stored in a precomputed score file."""

    def __init__(self, scores: dict[str, float], threshold: float = DEFAULT_THRESHOLD):
        self._scores = dict(scores)
        self.threshold = threshold

    def __len__(self) -> int:
        return len(self._scores)

    def score(self, statement: str, response: str) -> NspResult:
        key = pair_key(statement, response)
        if key not in self._scores:
            raise MissingScoreError(f"no stored score for pair key {key}")
        return self._result(self._scores[key])


def load_score_file(path: str | Path, threshold: float = DEFAULT_THRESHOLD) -> FileBackend:
    """Load a line-delimited score file into a file backend.

    Entries carry statement/response alongside the key; the key is recomputed
    on load so a drifting hash rule fails loudly instead of causing misses.
    """
    path = Path(path)
    scores: dict[str, float] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {e.msg}") from e
            if isinstance(record, dict) and "schema" in record:
                continue  # header record
            for field_name in ("key", "statement", "response", "p_next"):
                if field_name not in record:
                    raise SchemaError(f"{path}:{line_no}: missing field {field_name!r}")
            p = record["p_next"]
            if not isinstance(p, (int, float)) or not 0 <= p <= 1:
                raise ValidationError(f"{path}:{line_no}: p_next {p!r} outside [0, 1]")
            expected = pair_key(record["statement"], record["response"])
            if record["key"] != expected:
                raise ValidationError(
                    f"{path}:{line_no}: stored key {record['key']} does not match the "
                    f"canonical hash {expected} of its pair"
                )
            if record["key"] in scores:
                raise ValidationError(f"{path}:{line_no}: duplicate key {record['key']}")
            scores[record["key"]] = float(p)
    return FileBackend(scores, threshold=threshold)


def write_score_file(
    path: str | Path,
    entries: Sequence[tuple[str, str, float]],
    extra_header: dict | None = None,
) -> None:
    """Write (statement, response, p_next) triples in score-file format."""
    header = {"schema": SCORE_FILE_SCHEMA, "entries": len(entries)}
    if extra_header:
        header.update(extra_header)
    lines = [json.dumps(header, ensure_ascii=False)]
    seen: set[str] = set()
    for statement, response, p in entries:
        if not 0 <= p <= 1:
            raise ValidationError(f"p_next {p} outside [0, 1]")
        key = pair_key(statement, response)
        if key in seen:
            raise ValidationError(f"duplicate key {key}")
        seen.add(key)
        lines.append(
            json.dumps(
                {"key": key, "statement": statement, "response": response, "p_next": p},
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class RemoteBackend(NspBackend):
    """HTTP client for the /v1/nsp scoring protocol with bounded retries."""

    base_url: str
    threshold: float = DEFAULT_THRESHOLD
    timeout: float = 10.0
    max_in_flight: int = 4
    retries: int = 3
    backoff: float = 0.25
    _gate: threading.Semaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.base_url = self.base_url.rstrip("/")
        self._gate = threading.Semaphore(self.max_in_flight)

    def check_health(self) -> bool:
        try:
            response = requests.get(f"{self.base_url}/v1/health", timeout=self.timeout)
        except requests.RequestException:
            return False
        return response.status_code == 200

    def score(self, statement: str, response: str) -> NspResult:
        return self.score_batch([(statement, response)])[0]

    def score_batch(self, pairs: Sequence[Pair]) -> list[NspResult]:
        if not pairs:
            return []
        body = {"pairs": [{"statement": s, "response": r} for s, r in pairs]}
        payload = self._post_with_retries(body)
        return self._parse(payload, expected=len(pairs))

    def _post_with_retries(self, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._gate:
                    response = requests.post(
                        f"{self.base_url}/v1/nsp", json=body, timeout=self.timeout
                    )
            except requests.RequestException as e:
                last_error = e
                continue
            if response.status_code >= 500:
                last_error = TransportError(
                    f"scoring service answered {response.status_code}"
                )
                continue
            if response.status_code != 200:
                raise ProtocolError(
                    f"scoring service answered {response.status_code}: {response.text[:200]}"
                )
            try:
                return response.json()
            except ValueError as e:
                raise ProtocolError(f"scoring service sent non-JSON body: {e}") from e
        raise TransportError(
            f"scoring service unreachable after {self.retries + 1} attempts: {last_error}"
        )

    def _parse(self, payload: dict, expected: int) -> list[NspResult]:
        results = payload.get("results") if isinstance(payload, dict) else None
        if not isinstance(results, list) or len(results) != expected:
            raise ProtocolError(
                f"expected {expected} results, got "
                f"{len(results) if isinstance(results, list) else type(results).__name__}"
            )
        parsed = []
        for index, item in enumerate(results):
            p = item.get("p_next") if isinstance(item, dict) else None
            if not isinstance(p, (int, float)) or not 0 <= p <= 1:
                raise ProtocolError(f"result {index}: p_next {p!r} outside [0, 1]")
            parsed.append(self._result(float(p)))
        return parsed


def make_backend(config: NspBackendConfig) -> NspBackend:
    if config.kind == "stub":
        return StubBackend(threshold=config.threshold)
    if config.kind == "file":
        return load_score_file(config.location, threshold=config.threshold)
    return RemoteBackend(
        base_url=config.location,
        threshold=config.threshold,
        timeout=config.timeout,
        max_in_flight=config.max_in_flight,
    )


def parse_backend_spec(
    spec: str,
    threshold: float = DEFAULT_THRESHOLD,
    timeout: float = 10.0,
    max_in_flight: int = 4,
) -> NspBackendConfig:
    """Parse CLI backend notation: ``stub``, ``file:PATH``, or ``remote:URL``."""
    if spec == "stub":
        return NspBackendConfig("stub", threshold=threshold)
    kind, _, location = spec.partition(":")
    if kind in ("file", "remote") and location:
        return NspBackendConfig(
            kind, location=location, threshold=threshold,
            timeout=timeout, max_in_flight=max_in_flight,
        )
    raise ConfigError(f"bad NSP backend spec {spec!r}; use stub, file:PATH, or remote:URL")
